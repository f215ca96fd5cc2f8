#include <string>

#include "manifold/csv_io.hpp"
#include "manifold/experiment.hpp"

namespace manifold {

void ExperimentConfig::validate() const {
  if (n_values.size() < 3) throw UsageError("a scaling sweep needs at least 3 N values");
  for (int n : n_values) {
    if (n < 2) throw UsageError("sweep N values must be >= 2");
  }
  if (replicas < 2) throw UsageError("a sweep needs at least 2 replicas per N");
  if (!(min_ess >= 0.0)) throw UsageError("min_ess must be >= 0");
  model_params(n_values.front()).validate();
  schedule.validate();
}

ModelParams ExperimentConfig::model_params(int n) const {
  ModelParams p;
  p.shape = LatticeShape(n, d);
  p.range_dim = range_dim;
  p.beta = beta;
  p.gamma = gamma;
  return p;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"N_values", c.n_values},       {"d", c.d},
          {"D", c.range_dim},             {"beta", c.beta},
          {"gamma", c.gamma},             {"schedule", schedule_to_json(c.schedule)},
          {"replicas", c.replicas},       {"master_seed", c.master_seed},
          {"output_dir", c.output_dir},   {"rho", c.rho},
          {"min_ess", c.min_ess}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "N_values") c.n_values = value.get<std::vector<int>>();
      else if (key == "d") c.d = value.get<int>();
      else if (key == "D") c.range_dim = value.get<int>();
      else if (key == "beta") c.beta = value.get<double>();
      else if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "schedule") c.schedule = schedule_from_json(value);
      else if (key == "replicas") c.replicas = value.get<int>();
      else if (key == "master_seed") c.master_seed = value.get<std::uint64_t>();
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "rho") c.rho = value.get<double>();
      else if (key == "min_ess") c.min_ess = value.get<double>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t replica_seed(std::uint64_t master, int n, int replica) {
  return split_seed(master, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replica));
}

}  // namespace manifold
