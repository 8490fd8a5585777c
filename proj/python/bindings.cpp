#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sdg/commands.hpp"
#include "sdg/discrete_ba.hpp"
#include "sdg/errors.hpp"
#include "sdg/optimizer.hpp"
#include "sdg/sign_ba.hpp"
#include "sdg/theory.hpp"

namespace py = pybind11;

namespace {

using Rows = std::vector<std::vector<double>>;

sdg::ParamVector to_param(const std::vector<double>& v) { return sdg::ParamVector(v); }

std::vector<sdg::ParamVector> to_params(const Rows& rows) {
  std::vector<sdg::ParamVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

Rows to_rows(const std::vector<sdg::ParamVector>& vs) {
  Rows out;
  for (const auto& v : vs) out.push_back(v.values());
  return out;
}

sdg::DiscreteBAInstance make_instance(const Rows& candidates, const std::vector<double>& penalty,
                                      const Rows& domain_grads, double beta, double gamma) {
  sdg::DiscreteBAInstance inst;
  inst.candidates = to_params(candidates);
  inst.penalty = penalty;
  inst.domain_grads = to_params(domain_grads);
  inst.beta = beta;
  inst.gamma = gamma;
  return inst;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Satisficing domain generalization: sign-BA updates, discrete rate-distortion and experiment runners.";

  py::register_exception<sdg::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<sdg::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "beta_schedule",
      [](double beta_zero, std::size_t t, std::size_t horizon) {
        sdg::SdgSchedule s;
        s.beta_zero = beta_zero;
        s.current_t = t;
        s.horizon_T = horizon;
        return sdg::beta_schedule(s);
      },
      py::arg("beta_zero"), py::arg("t"), py::arg("horizon"), "beta_zero * sqrt(t / horizon).");

  m.def(
      "sign_ba",
      [](const Rows& domain_grads, const std::vector<double>& penalty_grad, double beta, double gamma,
         std::size_t iterations, const std::string& branch_mode) {
        const sdg::DomainGradientSet gs = sdg::build_gradient_set(to_params(domain_grads), to_param(penalty_grad));
        sdg::BaParams params{beta, gamma, iterations, sdg::parse_branch_mode(branch_mode)};
        sdg::BaTrace trace;
        const sdg::SignDistribution dist = sdg::ba_solve(gs, params, &trace);
        py::dict out;
        out["prob_plus"] = dist.prob_plus.values();
        out["prob_plus_e"] = to_rows(dist.prob_plus_e);
        out["g_plus"] = gs.g_plus.values();
        out["g_minus"] = gs.g_minus.values();
        out["max_disagreement"] = trace.max_disagreement;
        return out;
      },
      py::arg("domain_grads"), py::arg("penalty_grad"), py::arg("beta"), py::arg("gamma"),
      py::arg("iterations") = 25, py::arg("branch_mode") = "accumulations",
      "Per-parameter two-branch Blahut-Arimoto solve on raw per-domain gradients.");

  m.def(
      "discrete_ba",
      [](const Rows& candidates, const std::vector<double>& penalty, const Rows& domain_grads, double beta,
         double gamma, std::size_t iterations) {
        const auto inst = make_instance(candidates, penalty, domain_grads, beta, gamma);
        const sdg::BAResult r = sdg::discrete_ba_solve(inst, iterations);
        py::dict out;
        out["marginal"] = r.marginal;
        out["conditionals"] = r.conditionals;
        out["expected_penalty"] = r.expected_penalty;
        out["expected_distortion"] = r.expected_distortion;
        out["mutual_information"] = r.mutual_information;
        out["objective"] = sdg::regularized_objective(inst, r);
        return out;
      },
      py::arg("candidates"), py::arg("penalty"), py::arg("domain_grads"), py::arg("beta"), py::arg("gamma"),
      py::arg("iterations") = 500);

  m.def(
      "rd_curve",
      [](const Rows& candidates, const std::vector<double>& penalty, const Rows& domain_grads,
         const std::vector<double>& betas, double gamma, std::size_t iterations) {
        const auto inst = make_instance(candidates, penalty, domain_grads, 0.0, gamma);
        const std::vector<sdg::RdPoint> pts = sdg::rd_curve(inst, betas, iterations);
        py::list rows;
        for (const auto& p : pts) {
          py::dict d;
          d["beta"] = p.beta;
          d["expected_distortion"] = p.expected_distortion;
          d["expected_penalty"] = p.expected_penalty;
          d["mutual_information"] = p.mutual_information;
          rows.append(d);
        }
        py::dict out;
        out["points"] = rows;
        out["monotone"] = sdg::is_monotone(pts);
        out["convex"] = sdg::is_convex(pts);
        out["zero_distortion_penalty"] = sdg::zero_distortion_penalty(inst);
        return out;
      },
      py::arg("candidates"), py::arg("penalty"), py::arg("domain_grads"), py::arg("betas"), py::arg("gamma"),
      py::arg("iterations") = 500);

  m.def("registered_objectives", &sdg::registered_objectives);

  m.def(
      "prop1",
      [](const std::string& objective, double bias_norm, std::size_t steps, std::size_t seeds, std::uint64_t seed,
         double noise_scale) {
        sdg::Prop1Config c;
        c.objective = objective;
        c.bias_D = bias_norm;
        c.steps = steps;
        c.seeds = seeds;
        c.seed = seed;
        c.noise_scale = noise_scale;
        const sdg::Prop1Result r = sdg::run_prop1(c);
        py::dict out;
        out["avg_sq_grad_norm"] = r.avg_sq_grad_norm;
        out["bound_value"] = r.bound_value;
        out["bound_satisfied"] = r.bound_satisfied();
        out["per_seed_avg"] = r.per_seed_avg;
        out["trajectory"] = r.trajectory;
        out["step_size"] = r.step_size;
        return out;
      },
      py::arg("objective") = "quadratic", py::arg("bias_norm") = 0.0, py::arg("steps") = 1000,
      py::arg("seeds") = 10, py::arg("seed") = 0, py::arg("noise_scale") = 0.5,
      "Biased-SGD run with certified constants; returns the empirical average and its bound.");

  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed, bool overwrite) {
        sdg::CommandOptions o{config, out, seed, overwrite};
        std::ostringstream err;
        const int code = sdg::run_command(command, o, err);
        return py::make_tuple(code, err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("out") = std::filesystem::path(), py::arg("seed") = py::none(),
      py::arg("overwrite") = false,
      "Runs a CLI subcommand in-process. Returns (exit_code, diagnostics).");

  m.def("metrics_columns", [](const std::string& command) { return sdg::metrics_columns(command); });

  m.attr("__version__") = SDG_VERSION;
}
