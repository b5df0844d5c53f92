#include "cornsoy/production.hpp"

#include <algorithm>
#include <cmath>

#include "cornsoy/errors.hpp"
#include "cornsoy/model.hpp"

namespace cornsoy {

namespace {

constexpr double kCobbDouglasBand = 1e-9;
constexpr double kCellTol = 1e-10;
constexpr int kCellMaxIter = 200;

bool is_cobb_douglas(double sigma) { return std::abs(sigma - 1.0) < kCobbDouglasBand; }

NestDual make_dual(const CesNest& nest) {
    NestDual d;
    d.sigma = nest.sigma;
    d.share = nest.share;
    d.scale = nest.scale;
    d.cobb_douglas = is_cobb_douglas(nest.sigma);
    if (!d.cobb_douglas) {
        d.one_minus_sigma = 1.0 - nest.sigma;
        d.inv_one_minus_sigma = 1.0 / d.one_minus_sigma;
        d.a_pow_sigma = std::pow(nest.share, nest.sigma);
        d.b_pow_sigma = std::pow(1.0 - nest.share, nest.sigma);
    }
    return d;
}

// M = share^s * w1^(1-s) + (1-share)^s * w2^(1-s); unit cost = M^(1/(1-s))/scale.
double dual_aggregate(const NestDual& d, double w1, double w2) {
    return d.a_pow_sigma * std::pow(w1, d.one_minus_sigma) +
           d.b_pow_sigma * std::pow(w2, d.one_minus_sigma);
}

double dual_unit_cost(const NestDual& d, double w1, double w2) {
    if (d.cobb_douglas)
        return std::pow(w1 / d.share, d.share) *
               std::pow(w2 / (1.0 - d.share), 1.0 - d.share) / d.scale;
    return std::pow(dual_aggregate(d, w1, w2), d.inv_one_minus_sigma) / d.scale;
}

double dual_share1(const NestDual& d, double w1, double w2) {
    if (d.cobb_douglas) return d.share;
    const double t1 = d.a_pow_sigma * std::pow(w1, d.one_minus_sigma);
    return t1 / (t1 + d.b_pow_sigma * std::pow(w2, d.one_minus_sigma));
}

// Inverts unit cost for the first child's price: the w1 at which the nest's
// unit cost equals `target` given w2. Returns a negative number when no
// positive w1 can reach the target (the nest is infeasible at these prices).
double dual_invert_w1(const NestDual& d, double target, double w2) {
    if (d.cobb_douglas) {
        const double base = d.scale * target *
                            std::pow((1.0 - d.share) / w2, 1.0 - d.share);
        return d.share * std::pow(base, 1.0 / d.share);
    }
    const double mt = std::pow(d.scale * target, d.one_minus_sigma);
    const double rest = d.b_pow_sigma * std::pow(w2, d.one_minus_sigma);
    const double num = mt - rest;
    if (!(num > 0.0)) return -1.0;
    return std::pow(num / d.a_pow_sigma, d.inv_one_minus_sigma);
}

}  // namespace

// ---------------------------------------------------------------------------
// CES primitives
// ---------------------------------------------------------------------------

double ces_output(double x1, double x2, const CesNest& nest) {
    if (x1 < 0.0 || x2 < 0.0) throw Error("ces_output: negative input");
    if (is_cobb_douglas(nest.sigma)) {
        return nest.scale * std::pow(x1, nest.share) * std::pow(x2, 1.0 - nest.share);
    }
    const double rho = (nest.sigma - 1.0) / nest.sigma;
    if (rho < 0.0 && (x1 == 0.0 || x2 == 0.0)) return 0.0;  // essential inputs
    const double inner = nest.share * std::pow(x1, rho) +
                         (1.0 - nest.share) * std::pow(x2, rho);
    return nest.scale * std::pow(inner, 1.0 / rho);
}

double ces_unit_cost(double w1, double w2, const CesNest& nest) {
    if (!(w1 > 0.0) || !(w2 > 0.0)) throw Error("ces_unit_cost: nonpositive price");
    return dual_unit_cost(make_dual(nest), w1, w2);
}

double ces_cost_share1(double w1, double w2, const CesNest& nest) {
    if (!(w1 > 0.0) || !(w2 > 0.0)) throw Error("ces_cost_share1: nonpositive price");
    return dual_share1(make_dual(nest), w1, w2);
}

CesDemands ces_cost_and_demands(double w1, double w2, double q, const CesNest& nest) {
    if (!(w1 > 0.0) || !(w2 > 0.0))
        throw Error("ces_cost_and_demands: nonpositive price");
    if (q < 0.0) throw Error("ces_cost_and_demands: negative quantity");
    CesDemands out;
    if (q == 0.0) return out;
    const NestDual d = make_dual(nest);
    const double u = dual_unit_cost(d, w1, w2);
    const double s1 = dual_share1(d, w1, w2);
    out.cost = u * q;
    out.x1 = s1 * out.cost / w1;
    out.x2 = (1.0 - s1) * out.cost / w2;
    return out;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

namespace {

// Distribution parameter from the first-order condition at the baseline:
//   share/(1-share) = (V1/V2) * (x1/x2)^(-rho)
// and scale from the requirement that baseline inputs produce q0.
CesNest calibrate_nest(double x1, double v1, double x2, double v2, double q0,
                       double sigma) {
    CesNest nest;
    nest.sigma = sigma;
    if (is_cobb_douglas(sigma)) {
        nest.share = v1 / (v1 + v2);
        nest.scale = q0 / (std::pow(x1, nest.share) * std::pow(x2, 1.0 - nest.share));
        return nest;
    }
    const double rho = (sigma - 1.0) / sigma;
    const double t = (v1 / v2) * std::pow(x2 / x1, rho);
    nest.share = t / (1.0 + t);
    const double inner = nest.share * std::pow(x1, rho) +
                         (1.0 - nest.share) * std::pow(x2, rho);
    nest.scale = q0 / std::pow(inner, 1.0 / rho);
    return nest;
}

}  // namespace

Technology calibrate_technology(const TechnologyBaseline& base,
                                const CalibrationPrices& prices) {
    const bool irrigated = base.kind == TechKind::irrigated;
    if (!(base.base_acres > 0.0) || !(base.base_n_rate > 0.0))
        throw CalibrationError("calibrate_technology: baseline acres and N rate must be positive");
    if (!(base.values.land > 0.0) || !(base.values.nonland > 0.0) ||
        !(base.values.fert > 0.0) || (irrigated && !(base.values.water > 0.0)))
        throw CalibrationError("calibrate_technology: baseline input values must be positive");
    if (!(prices.output_price > 0.0) || !(prices.nonland_wage > 0.0) ||
        !(prices.fert_price > 0.0))
        throw CalibrationError("calibrate_technology: baseline prices must be positive");
    if (irrigated && !(base.base_water > 0.0))
        throw CalibrationError("calibrate_technology: irrigated technology needs baseline water");

    // Fertilizer substitution elasticity from the yield curvature at the
    // baseline N rate; undefined at or before the inflection point.
    const auto deriv = gompertz_derivatives(base.base_n_rate, base.transfer);
    if (!(deriv.d2y_dn2 < 0.0))
        throw CalibrationError(
            "calibrate_technology: baseline N rate is not beyond the Gompertz inflection "
            "(yield locally convex in N)");
    double sigma_nf = -deriv.dy_dn / (base.base_n_rate * deriv.d2y_dn2);
    sigma_nf = std::clamp(sigma_nf, 0.05, 3.0);

    Technology tech;
    tech.kind = base.kind;
    tech.transfer = base.transfer;
    tech.base_acres = base.base_acres;
    tech.base_n_rate = base.base_n_rate;
    tech.base_yield = base.base_yield;
    tech.base_values = base.values;
    tech.base_water = irrigated ? base.base_water : 0.0;
    tech.base_output = base.base_acres * base.base_yield;
    tech.base_fert_qty = base.base_n_rate * base.base_acres;
    tech.base_nonland_qty = base.values.nonland / prices.nonland_wage;
    tech.sigma_nf = sigma_nf;

    // Everything below is in prices normalized by the baseline output price,
    // which keeps the calibrated core independent of the currency unit.
    const double p0 = prices.output_price;
    tech.norm_rent = (base.values.land / base.base_acres) / p0;
    tech.norm_nonland_wage = prices.nonland_wage / p0;
    tech.norm_fert_price = prices.fert_price / p0;
    tech.norm_water_price = irrigated ? (base.values.water / base.base_water) / p0 : 0.0;

    // Composite quantities are measured in baseline normalized value, so each
    // composite's baseline price is exactly 1.
    const double v_land = base.values.land / p0;
    const double v_water = base.values.water / p0;
    const double v_nonland = base.values.nonland / p0;
    const double v_fert = base.values.fert / p0;

    if (irrigated) {
        const double q_lw = v_land + v_water;
        const double q_cn = q_lw + v_nonland;
        tech.nests.push_back(calibrate_nest(base.base_acres, v_land, base.base_water,
                                            v_water, q_lw, base.sigma_land_water));
        tech.nests.push_back(calibrate_nest(q_lw, q_lw, tech.base_nonland_qty, v_nonland,
                                            q_cn, base.sigma_comp_nonland));
        tech.nests.push_back(calibrate_nest(q_cn, q_cn, tech.base_fert_qty, v_fert,
                                            tech.base_output, sigma_nf));
    } else {
        const double q_ln = v_land + v_nonland;
        tech.nests.push_back(calibrate_nest(base.base_acres, v_land, tech.base_nonland_qty,
                                            v_nonland, q_ln, base.sigma_comp_nonland));
        tech.nests.push_back(calibrate_nest(q_ln, q_ln, tech.base_fert_qty, v_fert,
                                            tech.base_output, sigma_nf));
    }
    tech.dual.reserve(tech.nests.size());
    for (const auto& nest : tech.nests) tech.dual.push_back(make_dual(nest));
    tech.calibrated = true;
    return tech;
}

double technology_unit_cost(const Technology& tech, const CellPrices& prices) {
    if (!(prices.output_price > 0.0) || !(prices.nonland_wage > 0.0) ||
        !(prices.fert_price > 0.0) || !(prices.land_rent > 0.0) ||
        (tech.kind == TechKind::irrigated && !(prices.water_price > 0.0)))
        throw Error("technology_unit_cost: nonpositive price");
    if (tech.kind == TechKind::irrigated) {
        const double u_lw = dual_unit_cost(tech.dual[0], prices.land_rent, prices.water_price);
        const double u_cn = dual_unit_cost(tech.dual[1], u_lw, prices.nonland_wage);
        return dual_unit_cost(tech.dual[2], u_cn, prices.fert_price);
    }
    const double u_ln = dual_unit_cost(tech.dual[0], prices.land_rent, prices.nonland_wage);
    return dual_unit_cost(tech.dual[1], u_ln, prices.fert_price);
}

// ---------------------------------------------------------------------------
// Cell sub-equilibrium
// ---------------------------------------------------------------------------

namespace {

double isoelastic_supply(double base_qty, double rel_price, double elasticity,
                         double cap, bool* capped) {
    double q = elasticity == 0.0 ? base_qty : base_qty * std::pow(rel_price, elasticity);
    if (q > cap) {
        q = cap;
        *capped = true;
    }
    return q;
}

// Rainfed: zero profit pins the rent in closed form by inverting the unit-cost
// chain top-down; the land market then sets the activity level.
CellOutcome solve_rainfed(const GridCell& cell, const Technology& tech, double p_eff,
                          double w_nl, double p_f, double tfp) {
    CellOutcome out;
    const double u_ln = dual_invert_w1(tech.dual[1], p_eff, p_f);
    if (!(u_ln > 0.0)) {
        out.shutdown = true;
        return out;
    }
    const double rent = dual_invert_w1(tech.dual[0], u_ln, w_nl);
    if (!(rent > 0.0)) {
        out.shutdown = true;
        return out;
    }

    const double theta_f = 1.0 - dual_share1(tech.dual[1], u_ln, p_f);
    const double theta_land = dual_share1(tech.dual[0], rent, w_nl);
    const double big_land = (1.0 - theta_f) * theta_land;    // overall land cost share
    const double big_nl = (1.0 - theta_f) * (1.0 - theta_land);

    out.land_rent = rent / tech.norm_rent;  // relative to the baseline rent
    out.acres = isoelastic_supply(tech.base_acres, out.land_rent,
                                  cell.land_supply_elasticity, cell.land_endowment,
                                  &out.cap_land);
    const double q_f = out.acres * rent / (big_land * p_eff);  // technology units
    out.output = tfp * q_f;
    out.fert_qty = q_f * theta_f * p_eff / p_f;
    out.nonland_qty = q_f * big_nl * p_eff / w_nl;
    out.n_rate = out.acres > 0.0 ? out.fert_qty / out.acres : 0.0;
    out.leaching = out.acres * leach_rate(out.n_rate, tech.transfer);
    // Revenue at the (relative) cell price p_eff/tfp; cost from the solved bundle.
    out.profit_residual = (p_eff / tfp) * out.output -
                          (rent * out.acres + w_nl * out.nonland_qty + p_f * out.fert_qty);
    out.iterations = 0;
    return out;
}

// Irrigated: zero profit fixes the land-water composite cost; along that
// iso-cost curve a single monotone residual balances the land and water
// markets. Solved with a safeguarded secant (Illinois) on log water price.
CellOutcome solve_irrigated(const GridCell& cell, const Technology& tech, double p_eff,
                            double w_nl, double p_f, double tfp) {
    CellOutcome out;
    const double u_cn = dual_invert_w1(tech.dual[2], p_eff, p_f);
    if (!(u_cn > 0.0)) {
        out.shutdown = true;
        return out;
    }
    const double u_lw = dual_invert_w1(tech.dual[1], u_cn, w_nl);
    if (!(u_lw > 0.0)) {
        out.shutdown = true;
        return out;
    }

    const NestDual& bot = tech.dual[0];
    const double sigma = bot.sigma;

    // G(pw) = land-implied activity minus water-implied activity, up to a
    // common positive factor; strictly decreasing in pw along the iso-cost.
    bool cap_land = false, cap_water = false;
    const auto residual = [&](double pw, double* rent_out) {
        const double rent = dual_invert_w1(bot, u_lw, pw);
        *rent_out = rent;
        if (!(rent > 0.0)) return -1.0;  // past the feasible corner: water side wins
        cap_land = cap_water = false;
        const double a_sup = isoelastic_supply(tech.base_acres, rent / tech.norm_rent,
                                               cell.land_supply_elasticity,
                                               cell.land_endowment, &cap_land);
        const double w_sup = isoelastic_supply(tech.base_water, pw / tech.norm_water_price,
                                               cell.water_supply_elasticity,
                                               cell.water_endowment, &cap_water);
        double land_term, water_term;
        if (bot.cobb_douglas) {
            land_term = a_sup * rent / bot.share;
            water_term = w_sup * pw / (1.0 - bot.share);
        } else {
            land_term = a_sup * std::pow(rent, sigma) / bot.a_pow_sigma;
            water_term = w_sup * std::pow(pw, sigma) / bot.b_pow_sigma;
        }
        const double scale = 0.5 * (land_term + water_term);
        return (land_term - water_term) / scale;
    };

    // Bracket the root around the baseline water price.
    double lo = tech.norm_water_price * 0.5;
    double hi = tech.norm_water_price * 2.0;
    double rent_tmp = 0.0;
    double f_lo = residual(lo, &rent_tmp);
    double f_hi = residual(hi, &rent_tmp);
    int iter = 0;
    while (f_lo < 0.0 && iter < 60) {  // root is below lo
        hi = lo;
        f_hi = f_lo;
        lo *= 0.25;
        f_lo = residual(lo, &rent_tmp);
        ++iter;
    }
    while (f_hi > 0.0 && iter < 120) {  // root is above hi
        lo = hi;
        f_lo = f_hi;
        hi *= 4.0;
        f_hi = residual(hi, &rent_tmp);
        ++iter;
    }
    if (f_lo < 0.0 || f_hi > 0.0)
        throw CellNoConvergence(cell.cell_id, iter, std::min(std::abs(f_lo), std::abs(f_hi)));

    // Illinois method on log(pw).
    double x_lo = std::log(lo), x_hi = std::log(hi);
    double pw = std::sqrt(lo * hi);
    double f_mid = residual(pw, &rent_tmp);
    double rent = rent_tmp;
    int side = 0;
    while (std::abs(f_mid) >= kCellTol && iter < kCellMaxIter) {
        if (f_mid > 0.0) {
            x_lo = std::log(pw);
            f_lo = f_mid;
            if (side == 1) f_hi *= 0.5;
            side = 1;
        } else {
            x_hi = std::log(pw);
            f_hi = f_mid;
            if (side == -1) f_lo *= 0.5;
            side = -1;
        }
        double x = (x_lo * f_hi - x_hi * f_lo) / (f_hi - f_lo);
        if (!(x > x_lo && x < x_hi)) x = 0.5 * (x_lo + x_hi);
        pw = std::exp(x);
        f_mid = residual(pw, &rent_tmp);
        rent = rent_tmp;
        ++iter;
    }
    if (std::abs(f_mid) >= kCellTol)
        throw CellNoConvergence(cell.cell_id, iter, std::abs(f_mid));

    out.iterations = iter;
    out.land_rent = rent / tech.norm_rent;
    out.water_price = pw / tech.norm_water_price;
    out.acres = isoelastic_supply(tech.base_acres, out.land_rent,
                                  cell.land_supply_elasticity, cell.land_endowment,
                                  &out.cap_land);
    out.water_qty = isoelastic_supply(tech.base_water, out.water_price,
                                      cell.water_supply_elasticity, cell.water_endowment,
                                      &out.cap_water);

    const double theta_f = 1.0 - dual_share1(tech.dual[2], u_cn, p_f);
    const double theta_lw = dual_share1(tech.dual[1], u_lw, w_nl);
    const double theta_land = dual_share1(bot, rent, pw);
    const double big_land = (1.0 - theta_f) * theta_lw * theta_land;
    const double big_nl = (1.0 - theta_f) * (1.0 - theta_lw);

    const double q_f = out.acres * rent / (big_land * p_eff);
    out.output = tfp * q_f;
    out.fert_qty = q_f * theta_f * p_eff / p_f;
    out.nonland_qty = q_f * big_nl * p_eff / w_nl;
    out.n_rate = out.acres > 0.0 ? out.fert_qty / out.acres : 0.0;
    out.leaching = out.acres * leach_rate(out.n_rate, tech.transfer);
    out.profit_residual = (p_eff / tfp) * out.output -
                          (rent * out.acres + pw * out.water_qty +
                           w_nl * out.nonland_qty + p_f * out.fert_qty);
    return out;
}

}  // namespace

std::vector<CellOutcome> cell_supply_relative(const GridCell& cell, double rel_output_price,
                                              double rel_nonland_wage, double rel_fert_price,
                                              double tfp) {
    if (!(rel_output_price > 0.0) || !(rel_nonland_wage > 0.0) || !(rel_fert_price > 0.0))
        throw Error("cell_supply: nonpositive price");
    if (!(tfp > 0.0)) throw Error("cell_supply: nonpositive productivity multiplier");

    std::vector<CellOutcome> outcomes;
    outcomes.reserve(cell.technologies.size());
    for (const auto& tech : cell.technologies) {
        if (!tech.calibrated)
            throw CalibrationError("cell_supply: cell " + std::to_string(cell.cell_id) +
                                   " has an uncalibrated technology");
        const double p_eff = tfp * rel_output_price;  // effective output price
        const double w_nl = rel_nonland_wage * tech.norm_nonland_wage;
        const double p_f = rel_fert_price * tech.norm_fert_price;
        if (tech.kind == TechKind::rainfed)
            outcomes.push_back(solve_rainfed(cell, tech, p_eff, w_nl, p_f, tfp));
        else
            outcomes.push_back(solve_irrigated(cell, tech, p_eff, w_nl, p_f, tfp));
    }
    return outcomes;
}

std::vector<CellOutcome> cell_supply(const GridCell& cell, double output_price,
                                     double nonland_wage, double fert_price, double tfp) {
    if (!(output_price > 0.0) || !(nonland_wage > 0.0) || !(fert_price > 0.0))
        throw Error("cell_supply: nonpositive price");
    auto outcomes = cell_supply_relative(cell, output_price / cell.base_output_price,
                                         nonland_wage / cell.base_nonland_wage,
                                         fert_price / cell.base_fert_price, tfp);
    // Convert the relative rent/water prices and the residual to nominal.
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const Technology& tech = cell.technologies[i];
        auto& o = outcomes[i];
        o.land_rent *= tech.norm_rent * cell.base_output_price;
        o.water_price *= tech.norm_water_price * cell.base_output_price;
        o.profit_residual *= cell.base_output_price;
    }
    return outcomes;
}

}  // namespace cornsoy
