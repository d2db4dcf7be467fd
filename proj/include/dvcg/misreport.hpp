#pragma once

#include <cstdint>
#include <vector>

#include "dvcg/tables.hpp"

namespace dvcg {

/// Declared generator for one agent's candidate misreports. Truthfulness
/// quantifies over every r_tilde in [0,1]^{H x S x A}; a checker can only
/// certify over a finite family, so the family is always named explicitly.
struct MisreportFamily {
    enum class Kind { Grid, Cloud, Scale };

    Kind kind = Kind::Grid;

    // Grid: `grid_levels` evenly spaced values in [0, 1] per table entry,
    // enumerated exhaustively over the lowest-index entries; entries beyond
    // the varied prefix keep their truthful values. The prefix length is the
    // largest m with grid_levels^m <= max_profiles.
    int grid_levels = 3;
    long max_profiles = 19683;

    // Cloud: random perturbations of the truthful table, clamped to [0, 1].
    int cloud_count = 100;
    double cloud_magnitude = 0.25;
    uint64_t cloud_seed = 0;

    // Scale: reports alpha * truthful for each listed alpha.
    std::vector<double> scale_levels{0.0, 0.5};
};

/// Materialize the family for one agent given its truthful table.
std::vector<Grid3> enumerate_misreports(const MisreportFamily& family, const Grid3& truthful);

}  // namespace dvcg
