#pragma once

// Nested CES production technologies: two-input nests composed into the
// irrigated (land-water, composite-nonland, augmented-fertilizer) and rainfed
// (land-nonland, augmented-fertilizer) chains, their calibration from baseline
// cost shares, and the per-cell supply response given market prices.

#include <vector>

#include "cornsoy/transfer.hpp"

namespace cornsoy {

struct GridCell;  // defined in model.hpp

/// One two-input CES sub-production function.
///   q = scale * (share*x1^rho + (1-share)*x2^rho)^(1/rho),  rho = (sigma-1)/sigma
/// sigma within 1e-9 of 1 is evaluated as the Cobb-Douglas limit.
struct CesNest {
    double scale = 1.0;  // output units per input composite
    double share = 0.5;  // distribution parameter of the first child
    double sigma = 1.0;  // substitution elasticity, > 0
};

double ces_output(double x1, double x2, const CesNest& nest);

struct CesDemands {
    double cost = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
};

/// Cost-minimizing input bundle producing q at prices (w1, w2); unit cost is
/// cost/q. Dual of ces_output: the returned bundle reproduces q and exhausts
/// the cost exactly (up to rounding).
CesDemands ces_cost_and_demands(double w1, double w2, double q, const CesNest& nest);

/// Unit cost (1/scale)*(share^s*w1^(1-s) + (1-share)^s*w2^(1-s))^(1/(1-s)).
double ces_unit_cost(double w1, double w2, const CesNest& nest);

/// Cost share of the first child at prices (w1, w2).
double ces_cost_share1(double w1, double w2, const CesNest& nest);

enum class TechKind { irrigated, rainfed };

/// Baseline input values (currency at the calibration point).
struct InputValues {
    double land = 0.0;
    double water = 0.0;
    double nonland = 0.0;
    double fert = 0.0;
    double total() const { return land + water + nonland + fert; }
};

/// Pre-calibration baseline record for one technology in one cell.
struct TechnologyBaseline {
    TechKind kind = TechKind::rainfed;
    double base_acres = 0.0;
    double base_water = 0.0;   // acre-feet, irrigated only
    double base_n_rate = 0.0;  // kg-N/acre
    double base_yield = 0.0;   // tons/acre
    InputValues values;
    TransferParams transfer;
    double sigma_land_water = 0.15;
    double sigma_comp_nonland = 0.5;
};

/// Baseline market prices needed to calibrate a technology.
struct CalibrationPrices {
    double output_price = 1.0;   // regional price faced by the cell
    double nonland_wage = 1.0;
    double fert_price = 1.0;
};

// Cached per-nest constants for the price-space (dual) evaluations.
struct NestDual {
    double sigma = 1.0;
    double one_minus_sigma = 0.0;
    double inv_one_minus_sigma = 0.0;
    double a_pow_sigma = 0.0;  // share^sigma
    double b_pow_sigma = 0.0;  // (1-share)^sigma
    double scale = 1.0;
    bool cobb_douglas = true;
    double share = 0.5;
};

/// A calibrated technology. Currency-free internally: all prices are stored
/// relative to the cell's baseline output price, so rescaling the numeraire
/// never touches the calibrated core.
struct Technology {
    TechKind kind = TechKind::rainfed;
    std::vector<CesNest> nests;  // irrigated: lw, cn, nf; rainfed: ln, nf
    TransferParams transfer;
    double base_acres = 0.0;
    double base_n_rate = 0.0;
    double base_yield = 0.0;
    InputValues base_values;

    // Physical baselines derived during calibration.
    double base_water = 0.0;        // acre-feet
    double base_output = 0.0;       // tons = base_acres * base_yield
    double base_fert_qty = 0.0;     // kg-N = base_n_rate * base_acres
    double base_nonland_qty = 0.0;  // units

    // Baseline prices normalized by the cell's baseline output price.
    double norm_rent = 0.0;
    double norm_water_price = 0.0;
    double norm_nonland_wage = 0.0;
    double norm_fert_price = 0.0;

    double sigma_nf = 0.0;  // fertilizer substitution elasticity from curvature

    bool calibrated = false;
    std::string calibration_error;

    // Dual caches, one per nest, aligned with `nests`.
    std::vector<NestDual> dual;
};

/// Calibrates one technology: distribution parameters from baseline cost
/// shares, scale parameters from baseline quantities, and the top-nest
/// fertilizer elasticity from the Gompertz curvature at the baseline N rate,
///   sigma_nf = -y'(n0) / (n0 * y''(n0)),
/// clamped to [0.05, 3.0]. Throws CalibrationError when the baseline N rate
/// does not lie beyond the Gompertz inflection point (y'' >= 0 there).
Technology calibrate_technology(const TechnologyBaseline& base,
                                const CalibrationPrices& prices);

/// Market prices faced by one cell (used by cost evaluation and tests).
struct CellPrices {
    double output_price = 1.0;
    double nonland_wage = 1.0;
    double fert_price = 1.0;
    double land_rent = 1.0;
    double water_price = 1.0;
};

/// Unit cost of the full nest chain at the given prices.
double technology_unit_cost(const Technology& tech, const CellPrices& prices);

/// Outcome of one technology's sub-equilibrium within a cell.
struct CellOutcome {
    double acres = 0.0;
    double n_rate = 0.0;       // kg-N/acre
    double output = 0.0;       // tons
    double leaching = 0.0;     // kg-N
    double nonland_qty = 0.0;
    double fert_qty = 0.0;     // kg-N
    double water_qty = 0.0;    // acre-feet
    double land_rent = 0.0;    // nominal, same units as the output price passed in
    double water_price = 0.0;  // nominal
    double profit_residual = 0.0;  // currency, diagnostic
    bool cap_land = false;
    bool cap_water = false;
    bool shutdown = false;
    int iterations = 0;
};

/// Solves the cell sub-equilibrium for every technology in the cell: the land
/// rent (and water price, for irrigated technologies) clearing the local
/// factor markets under zero profit, given the output price and the two
/// regionally-cleared factor prices. `tfp` is a Hicks-neutral productivity
/// multiplier (1 at the baseline). Residual tolerances are 1e-10 relative;
/// throws CellNoConvergence after 200 iterations.
std::vector<CellOutcome> cell_supply(const GridCell& cell, double output_price,
                                     double nonland_wage, double fert_price,
                                     double tfp = 1.0);

/// Same solve in baseline-relative prices (ratios to the calibration values);
/// this is the path the market solver uses, so rescaling the numeraire leaves
/// physical results bit-identical. Outcome rent/water prices are relative.
std::vector<CellOutcome> cell_supply_relative(const GridCell& cell, double rel_output_price,
                                              double rel_nonland_wage, double rel_fert_price,
                                              double tfp = 1.0);

}  // namespace cornsoy
