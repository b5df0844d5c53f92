#pragma once

// The calibrated model: grid cells with their technologies, the 16 demand and
// supply regions, baseline prices, and the consistency validator that runs
// before any solve.

#include <map>
#include <string>
#include <vector>

#include "cornsoy/production.hpp"

namespace cornsoy {

/// One 5-arc-minute land unit.
struct GridCell {
    long cell_id = 0;
    double lon = 0.0;
    double lat = 0.0;
    double land_endowment = 0.0;   // acres, maximum cultivable corn-soy area
    double water_endowment = 0.0;  // acre-feet, irrigated cells
    double land_supply_elasticity = 0.25;
    double water_supply_elasticity = 0.15;
    std::vector<Technology> technologies;  // 1-2 entries
    std::vector<std::string> basin_tags;

    // Baseline nominal prices faced by the cell; set when the model is
    // assembled, rescaled by scale_numeraire.
    double base_output_price = 1.0;
    double base_nonland_wage = 1.0;
    double base_fert_price = 1.0;
};

/// A demand/supply aggregate: the gridded US plus 15 rest-of-world regions.
struct Region {
    std::string region_id;
    bool is_gridded = false;
    double base_food_demand = 0.0;     // corn-equivalent tons
    double base_biofuel_demand = 0.0;  // corn-equivalent tons
    double income_elasticity = 0.5;
    double demand_price_elasticity = 0.3;  // magnitude of the own-price response
    double base_supply = 0.0;              // non-gridded regions only
    double supply_price_elasticity = 0.2;
    double nonland_supply_elasticity = 2.0;  // used for the gridded region
    double fert_supply_elasticity = 5.0;     // used for the gridded region
    double price_margin = 1.0;               // regional price = margin * world price
    double base_price = 0.0;                 // margin * base world price, set at assembly
};

/// A basin aggregation mask; basins may overlap.
struct BasinMask {
    std::string basin_id;
    std::vector<long> cell_ids;  // ascending
};

struct Model {
    std::vector<GridCell> cells;    // ascending cell_id
    std::vector<Region> regions;    // exactly one is_gridded
    std::vector<BasinMask> basins;  // optional, used by reporting

    double base_world_price = 1.0;    // currency/ton, the numeraire anchor
    double base_nonland_price = 1.0;  // currency/unit
    double base_fert_price = 1.0;     // currency/kg-N
    std::string numeraire = "world_price";

    // Ordered-reduction totals cached by finalize().
    double base_grid_output = 0.0;   // tons
    double base_nonland_qty = 0.0;   // units
    double base_fert_qty = 0.0;      // kg-N
    double base_total_demand = 0.0;  // tons
    double base_row_supply = 0.0;    // tons
    std::size_t gridded_region = 0;  // index into regions

    /// Recomputes cached totals, region base prices, and per-cell baseline
    /// price copies. Call after construction and after scale_numeraire.
    void finalize();

    const Region& us() const { return regions[gridded_region]; }
};

/// Multiplies every nominal baseline price and value by lambda. Quantities and
/// the calibrated (dimensionless) technology cores are untouched, so physical
/// solve results are bit-identical under any lambda > 0.
void scale_numeraire(Model& model, double lambda);

struct Violation {
    std::string code;      // machine-readable, e.g. CALIB_YIELD
    std::string location;  // cell/region/technology identifier
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool clean() const { return violations.empty(); }
};

/// Checks every type invariant plus the two model-level calibration
/// identities (zero profit per technology, world market clearing at the
/// baseline). Never throws on model defects: everything is reported.
///
/// Codes: TRANSFER_PARAM, CES_PARAM, NEST_COUNT, CALIB_YIELD, CALIB_CURVATURE,
/// CALIB_COST, CALIB_MARKET, ACRES_ENDOWMENT, WATER_ENDOWMENT, TOPOLOGY,
/// NEGATIVE_QUANTITY, BAD_ELASTICITY, BASIN_CELL, CELL_ORDER.
ValidationReport validate_model(const Model& model);

}  // namespace cornsoy
