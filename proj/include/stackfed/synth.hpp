#pragma once

#include <cstddef>
#include <cstdint>

#include "stackfed/tabular.hpp"

namespace stackfed {

// Desk-scale stand-in for the large public tabular benchmarks: two
// class-conditional Gaussian clusters with different, rotated covariances
// over ten numeric features (x0..x9), plus two categorical features (c0, c1)
// whose category frequencies depend on the class. Target column "y" with
// labels "0" (about 60%) and "1".
Dataset synthetic_dataset(std::size_t rows, std::uint64_t seed);

}  // namespace stackfed
