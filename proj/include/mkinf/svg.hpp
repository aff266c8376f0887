#pragma once

#include <cstddef>
#include <string>

#include "mkinf/measures.hpp"
#include "mkinf/process.hpp"

namespace mkinf::svg {

/// Sample paths t -> X_t(x) of one coordinate, stroke width by atom weight.
std::string paths(const ProcessRepresentation& proc, std::size_t coord = 0);

/// Stem plot of atom weights in 1D; weighted scatter of the first two
/// coordinates otherwise.
std::string measure(const DiscreteMeasure& mu);

}  // namespace mkinf::svg
