#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stainkit/augmentation.hpp"
#include "stainkit/stain_estimation.hpp"

namespace stainkit::synthetic {

/// A named staining: haematoxylin counterstain plus one chromogen.
struct Staining {
  std::string name;
  StainProfile profile;
};

/// Five illustrative stainings (PAS, Jones H&E, CD68, Sirius Red, CD34).
/// The chromogen vectors are plausible hues chosen for demonstration and
/// testing, not measured values. PAS comes first.
std::vector<Staining> stainings();

/// Renders a tissue patch in `profile`'s stains: textured tissue over a white
/// margin, with a nucleus-dense round glomerulus at the centre whose extent is
/// the returned mask. Pure function of (profile, size, seed).
Sample glomerulus_patch(const StainProfile& profile, int size, std::uint64_t seed);

/// Slide of `width` x `height` with tissue on the left 3/4 and `count`
/// glomeruli of the given radius; the annotation polygons are octagons.
struct SyntheticSlide {
  Image image;
  std::vector<std::vector<std::pair<double, double>>> glomeruli;
};
SyntheticSlide slide(const StainProfile& profile, int width, int height, int count, double radius,
                     std::uint64_t seed);

}  // namespace stainkit::synthetic
