#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omab/csv.hpp"
#include "omab/error.hpp"
#include "omab/harness.hpp"
#include "omab/metrics.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailure = 2;
constexpr int kIo = 3;

struct BoundFlags {
  bool nstab = false, nid = false, good_event = false, pgood = false, kl = false;
  std::string model;
  double gap = 0.1, base_gap = 0.2, conf = 0.05;
  std::size_t k = 2;
  std::int64_t t = 1000, tau = 1, block = 2;
  double m_tau = 0.0, n_min = 0.0, samples = 0.0;
  std::size_t dim = 1, clusters = 1;
  double c_model = 1.0, lipschitz = 0.25;
  double rate = 0.5, q = 0.5, p = 0.5;
};

void print(const std::string& name, double value) {
  std::cout << name << " = " << omab::format_real(value) << "\n";
}

int run_bounds(const BoundFlags& f) {
  using namespace omab;
  bool any = false;
  if (f.nstab) {
    print("N_stab", n_stab(f.gap, f.conf, f.k, f.t));
    any = true;
  }
  if (f.nid) {
    print("N_id", n_id(f.gap, f.conf, f.k));
    any = true;
  }
  if (f.good_event) {
    const auto g = delta_good_event(f.m_tau, f.base_gap, f.gap, f.k, f.t, f.tau, f.n_min);
    print("delta_G.stability", g.stability_term);
    print("delta_G.identification", g.identification_term);
    print("delta_G", g.total());
    any = true;
  }
  if (!f.model.empty()) {
    IdentificationParams p;
    if (f.model == "linear") p.kind = IdentificationModel::linear;
    else if (f.model == "nonlinear") p.kind = IdentificationModel::nonlinear;
    else if (f.model == "cluster") p.kind = IdentificationModel::cluster;
    else if (f.model == "zero") p.kind = IdentificationModel::zero_knowledge;
    else throw InvalidParameter("--model must be linear, nonlinear, cluster or zero");
    p.num_arms = f.k;
    p.gap = f.gap;
    p.samples = f.samples;
    p.c_lin = f.c_model;
    p.c_nl = f.c_model;
    p.dim = f.dim;
    p.lipschitz_max = f.lipschitz;
    p.clusters = f.clusters;
    print("model_term", model_identification_term(p));
    any = true;
  }
  if (f.pgood) {
    print("p_good", p_good_block(f.rate, f.block, f.q));
    any = true;
  }
  if (f.kl) {
    print("kl", bernoulli_kl(f.p, f.q));
    any = true;
  }
  if (!any) throw CLI::ValidationError("bounds", "select at least one quantity");
  return kOk;
}

int run_validate() {
  const auto results = omab::validate();
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.module << ": " << r.name << " (" << r.detail
              << ")\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kFailure;
}

int run_config(const std::string& path) {
  const auto config = omab::load_config(path);
  const auto summary = omab::run_experiment(config);
  for (const auto& row : summary.rows) {
    if (!row.assertion.empty()) std::cerr << "replication " << row.index << ": " << row.assertion << "\n";
  }
  std::cout << "wrote " << summary.rows.size() << " replications to " << summary.output_dir << "\n";
  return summary.assertion_failed ? kFailure : kOk;
}

int run_instance(const std::string& kind, const std::vector<std::string>& params,
                 const std::string& out) {
  omab::ParamMap map;
  for (const auto& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError("instance", "expected key=value, got '" + kv + "'");
    }
    if (!map.emplace(kv.substr(0, eq), kv.substr(eq + 1)).second) {
      throw CLI::ValidationError("instance", "duplicate parameter " + kv.substr(0, eq));
    }
  }
  omab::save_instance(omab::generate_instance(kind, map), out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open multi-agent bandit simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required();

  std::string kind, out;
  std::vector<std::string> params;
  auto* inst = app.add_subcommand("instance", "Generate an instance document");
  inst->add_option("kind", kind, "generator")->required()->check(CLI::IsMember(omab::generator_names()));
  inst->add_option("params", params, "key=value parameters");
  inst->add_option("-o,--output", out, "output file")->required();

  BoundFlags f;
  auto* bounds = app.add_subcommand("bounds", "Evaluate closed-form bounds");
  bounds->add_flag("--nstab", f.nstab, "stability sample threshold");
  bounds->add_flag("--nid", f.nid, "identification sample threshold");
  bounds->add_flag("--good-event", f.good_event, "good-event failure probability");
  bounds->add_option("--model", f.model, "identification term: linear|nonlinear|cluster|zero");
  bounds->add_flag("--pgood", f.pgood, "good-block probability");
  bounds->add_flag("--kl", f.kl, "Bernoulli KL(p || q)");
  bounds->add_option("--delta", f.gap, "gap");
  bounds->add_option("--base-gap", f.base_gap, "limiting gap");
  bounds->add_option("--conf", f.conf, "confidence level");
  bounds->add_option("--k", f.k, "number of arms");
  bounds->add_option("--t", f.t, "horizon");
  bounds->add_option("--tau", f.tau, "commit round");
  bounds->add_option("--m-tau", f.m_tau, "population at the commit round");
  bounds->add_option("--n-min", f.n_min, "smallest per-arm count");
  bounds->add_option("--samples", f.samples, "sample count for the model term");
  bounds->add_option("--dim", f.dim, "feature or parameter dimension");
  bounds->add_option("--clusters", f.clusters, "cluster count");
  bounds->add_option("--c-model", f.c_model, "model constant");
  bounds->add_option("--lipschitz", f.lipschitz, "largest link Lipschitz constant");
  bounds->add_option("--rate", f.rate, "informative arrival rate");
  bounds->add_option("--block", f.block, "block length");
  bounds->add_option("--q", f.q, "q");
  bounds->add_option("--p", f.p, "p");

  auto* val = app.add_subcommand("validate", "Run the module property battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return run_config(config_path);
    if (*inst) return run_instance(kind, params, out);
    if (*bounds) return run_bounds(f);
    if (*val) return run_validate();
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const omab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const omab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const omab::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const omab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
