#pragma once

#include "nilgeo/metrics.hpp"
#include "nilgeo/report.hpp"

#include <functional>

namespace nilgeo {

// Every experiment takes a JSON config, fills in defaults and echoes the resolved config into the report.
// Keys common to all: seed, grid, modes, starts, panels.

Budget budget_from_config(json& cfg);

// certified interval for d(e, p): exact oracle when one exists, else abelianization / optimizer
Interval distance_interval(const SubRiemannianStructure& S, const Vec& p, const Budget& b);

// Radial and random targets at growing asymptotic scales; d_inf^2 - d^2 intervals.
// cfg: scales, directions (list of vectors), random_per_scale
ExperimentReport gap_scan(const SubRiemannianStructure& S, json cfg = json::object());

// Same scan with d_inf replaced by the distance of a second structure on the same group;
// a norm mismatch should make |d'^2 - d^2| grow faster than linearly.
ExperimentReport mismatch_scan(const SubRiemannianStructure& S, const SubRiemannianStructure& S2,
                               json cfg = json::object());

// cfg: samples, q_scale (max asymptotic scale of q), zeta_scale
ExperimentReport ballbox_check(const SubRiemannianStructure& S, json cfg = json::object());

// Riemannian Heisenberg ball volume by revolving the sphere profile.
double heisenberg_ball_volume(double r, double tol = 1e-10);
// cfg: radii, fit_radii, small_radii
ExperimentReport heisenberg_volume(json cfg = json::object());

// cfg: r, samples, strata, kappa_margin
ExperimentReport mc_ball_volume(const SubRiemannianStructure& S, json cfg = json::object());

// sub-Riemannian Heisenberg ball volume: revolved profile, and the same from the exact distance by slicing
double heisenberg_sr_ball_volume(double r);
double heisenberg_sr_ball_volume_sliced(double r, int slices = 400);
// cfg: radii
ExperimentReport finsler_linf_volume(json cfg = json::object());

// cfg: n (list), z_sign
ExperimentReport engel_gap(const SubRiemannianStructure& S, json cfg = json::object());

using PointMap = std::function<Vec(const Vec&)>;
// cfg: scales, pairs_per_scale, expect ("bounded" | "linear" | "zero"), slope
ExperimentReport rough_isometry_scan(const SubRiemannianStructure& S, const PointMap& phi,
                                     json cfg = json::object());

// Sub-Riemannian Heisenberg with frame {2X, Y}: same group, mismatched norm.
SubRiemannianStructure stretched_heisenberg(const SubRiemannianStructure& S);

}  // namespace nilgeo
