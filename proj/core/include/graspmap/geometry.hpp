#pragma once

#include <array>
#include <utility>

#include "graspmap/types.hpp"

namespace graspmap {

struct GmmFit;  // gmm.hpp

/// Sigma conventions for the rectangle -> mixture encoding. The plate-axis
/// sigma is h / kSigmaXDivisor; the opening-axis sigma is kSigmaYAt128 pixels
/// on a 128-wide grid and scales linearly with grid width.
inline constexpr double kSigmaXDivisor = 4.0;
inline constexpr double kSigmaYAt128 = 4.0;

/// Belief maps are binarized at this fraction of their peak value when a
/// rectangle is recovered from a map.
inline constexpr double kDecodeThreshold = 0.2;

/// Two fitted means closer than this (pixels) cannot yield a rectangle.
inline constexpr double kDegenerateMeanDistance = 0.5;

/// A mixture weight below this marks a starved component: the map carries a
/// single mode rather than two gripper plates.
inline constexpr double kDegenerateWeight = 0.05;

inline double sigma_y_for_grid(const GridSpec& grid) {
    return kSigmaYAt128 * grid.width / 128.0;
}

/// Encodes a grasp rectangle as the two plate-centered Gaussian components.
/// The means sit at center +/- (w/2)(cos theta, sin theta), so their distance
/// is exactly w. sigma_x = h / kSigmaXDivisor spans the plates, sigma_y spans
/// the opening (kSigmaYAt128 unless the caller rescales for a smaller grid).
std::pair<GaussianComponent, GaussianComponent>
rectangle_to_components(const GraspRectangle& rect, double sigma_y = kSigmaYAt128);

/// Density of the two-component mixture at point p (un-normalized map value).
double mixture_density(const std::pair<GaussianComponent, GaussianComponent>& comps,
                       const Vec2& p);

/// Renders the grasp belief map of a rectangle: the N=2 oriented Gaussian
/// mixture evaluated at every pixel center, rescaled to peak 1.0.
/// Throws OutOfBoundsError if either component mean falls outside the grid.
BeliefMap render_belief_map(const GraspRectangle& rect, const GridSpec& grid);

/// Renders an explicit component pair (used for planted-mixture fixtures).
BeliefMap render_components(const std::pair<GaussianComponent, GaussianComponent>& comps,
                            const GridSpec& grid);

/// Recovers a grasp rectangle from a belief map and a converged two-component
/// fit of it: center is the midpoint of the fitted means, w their distance,
/// theta the angle of the line joining them folded into [0, 180), and h the
/// major-axis length of the connected region around each mean after
/// binarizing the map at kDecodeThreshold x peak, averaged over components.
/// Throws DegenerateMapError when the map does not carry two separable modes:
/// (nearly) coincident means, a starved component, an empty binarized region,
/// or one connected region holding both means.
GraspRectangle decode_belief_map(const BeliefMap& map, const GmmFit& fit);

/// Corners of the oriented box, counter-clockwise (positive shoelace area).
/// The first edge runs along the opening direction (length w), the second
/// along the plates (length h).
std::array<Vec2, 4> rectangle_to_corners(const GraspRectangle& rect);

/// Inverse of rectangle_to_corners; also parses Cornell 4-corner groups.
/// theta comes from the first edge direction mod 180, w from the first/third
/// edge lengths and h from the second/fourth. Throws InvalidCoordinatesError
/// on non-finite input and NotARectangleError when any corner angle deviates
/// from 90 degrees by more than `tolerance_deg`.
GraspRectangle corners_to_rectangle(const std::array<Vec2, 4>& points,
                                    double tolerance_deg = 5.0);

} // namespace graspmap
