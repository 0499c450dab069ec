#include "adesens/report.hpp"

#include <charconv>
#include <iterator>
#include <ostream>

#include <json.hpp>

namespace adesens {

namespace {

using nlohmann::ordered_json;

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void put(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

void write_curve_json(std::ostream& out, const SensitivityCurve& curve) {
  ordered_json doc;
  doc["alpha"] = curve.alpha;
  doc["t"] = curve.lse_t;
  ordered_json grid = ordered_json::array();
  for (std::size_t i = 0; i < curve.estimates.size(); ++i) {
    const BoundEstimate& e = curve.estimates[i];
    grid.push_back({{"gamma", e.gamma},
                    {"psi_min", e.psi_min_hat},
                    {"psi_max", e.psi_max_hat},
                    {"ci_lower", e.ci_lower},
                    {"ci_upper", e.ci_upper},
                    {"sim_lower", curve.sim_lower[i]},
                    {"sim_upper", curve.sim_upper[i]}});
  }
  doc["grid"] = std::move(grid);
  doc["a_hat"] = curve.a_hat;
  doc["b_hat"] = curve.b_hat;
  doc["se_a"] = curve.se_a;
  doc["se_b"] = curve.se_b;
  doc["crossings"] = {{"point", optional_number(curve.crossings.point)},
                      {"pointwise", optional_number(curve.crossings.pointwise)},
                      {"simultaneous", optional_number(curve.crossings.simultaneous)}};
  out << doc.dump(2) << '\n';
}

void write_curve_csv(std::ostream& out, const SensitivityCurve& curve) {
  out << "gamma,psi_min,psi_max,ci_lower,ci_upper,sim_lower,sim_upper\n";
  for (std::size_t i = 0; i < curve.estimates.size(); ++i) {
    const BoundEstimate& e = curve.estimates[i];
    const double row[] = {e.gamma,    e.psi_min_hat,      e.psi_max_hat,     e.ci_lower,
                          e.ci_upper, curve.sim_lower[i], curve.sim_upper[i]};
    for (std::size_t k = 0; k < std::size(row); ++k) {
      if (k > 0) out << ',';
      put(out, row[k]);
    }
    out << '\n';
  }
}

void write_verification_jsonl(std::ostream& out, const VerificationReport& report) {
  for (const VerificationLine& l : report.lines) {
    const ordered_json line = {{"instance_id", l.instance_id}, {"kind", l.kind},
                               {"lp_value", l.lp_value},       {"closed_form", l.closed_form},
                               {"gap", l.gap},                 {"tolerance", l.tolerance},
                               {"pass", l.pass}};
    out << line.dump() << '\n';
  }
}

void write_model_jsonl(std::ostream& out, const ModelReport& report) {
  for (const ModelCheck& c : report.checks) {
    const ordered_json line = {
        {"check", c.check},
        {"max_violation", c.max_violation},
        {"tolerance", c.tolerance},
        {"pass", c.pass},
        {"worst", {{"a", c.worst_a}, {"a_prime", c.worst_a_prime}, {"u", c.worst_u}}}};
    out << line.dump() << '\n';
  }
}

}  // namespace adesens
