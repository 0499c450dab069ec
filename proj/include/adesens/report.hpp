#ifndef ADESENS_REPORT_HPP_
#define ADESENS_REPORT_HPP_

#include <iosfwd>

#include "adesens/inference.hpp"
#include "adesens/oracle.hpp"

namespace adesens {

// {alpha, t, grid: [{gamma, psi_min, psi_max, ci_lower, ci_upper, sim_lower,
// sim_upper}], a_hat, b_hat, se_a, se_b, crossings: {point, pointwise,
// simultaneous}}; a crossing that does not exist is null.
void write_curve_json(std::ostream& out, const SensitivityCurve& curve);
// One row per grid point with the same columns as the JSON grid entries.
void write_curve_csv(std::ostream& out, const SensitivityCurve& curve);

// JSON lines {instance_id, kind, lp_value, closed_form, gap, tolerance, pass}.
void write_verification_jsonl(std::ostream& out, const VerificationReport& report);
// JSON lines {check, max_violation, tolerance, pass, worst: {a, a_prime, u}}.
void write_model_jsonl(std::ostream& out, const ModelReport& report);

}  // namespace adesens

#endif  // ADESENS_REPORT_HPP_
