// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#include "fracprox/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "fracprox/criticality.hpp"
#include "fracprox/models.hpp"
#include "fracprox/random.hpp"

namespace fracprox {

std::string AlgoSpec::name() const {
  return schedule == Schedule::Cyclic ? "cmpga" : "rmpga";
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + s + "' for key '" + key + "'");
  }
}

long parse_long(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value '" + s + "' for key '" + key + "'");
  }
}

GridCell parse_grid_cell(const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != 5 && parts.size() != 6) {
    throw ConfigError("grid expects 'm,n,r,D,lambda[,K]', got '" + value + "'");
  }
  GridCell cell;
  cell.m = parse_long(parts[0], "grid.m");
  cell.n = parse_long(parts[1], "grid.n");
  cell.r = parse_long(parts[2], "grid.r");
  cell.coherence = parse_double(parts[3], "grid.D");
  cell.lambda = parse_double(parts[4], "grid.lambda");
  cell.k_norm = parts.size() == 6 ? static_cast<int>(parse_long(parts[5], "grid.K")) : 0;
  return cell;
}

AlgoSpec parse_algo(const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != 3) {
    throw ConfigError("algo expects 'cmpga|rmpga,blocks,memory', got '" + value + "'");
  }
  AlgoSpec algo;
  if (parts[0] == "cmpga") {
    algo.schedule = Schedule::Cyclic;
  } else if (parts[0] == "rmpga") {
    algo.schedule = Schedule::Randomized;
  } else {
    throw ConfigError("unknown algorithm '" + parts[0] + "'");
  }
  algo.blocks = static_cast<int>(parse_long(parts[1], "algo.blocks"));
  algo.memory = static_cast<int>(parse_long(parts[2], "algo.memory"));
  return algo;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentSpec parse_experiment(std::istream& is, const std::string& origin) {
  ExperimentSpec spec;
  bool stop_set = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "model") {
      try {
        spec.model = model_from_name(value);
      } catch (const std::exception& e) {
        throw ConfigError(origin + ": " + e.what());
      }
    } else if (key == "instances") {
      spec.instances_per_cell = static_cast<int>(parse_long(value, key));
    } else if (key == "base_seed") {
      spec.base_seed = static_cast<std::uint64_t>(parse_long(value, key));
    } else if (key == "out") {
      spec.output_path = value;
    } else if (key == "grid") {
      spec.grid.push_back(parse_grid_cell(value));
    } else if (key == "algo") {
      spec.algorithms.push_back(parse_algo(value));
    } else if (key == "sigma") {
      spec.sigma = parse_double(value, key);
    } else if (key == "gamma") {
      spec.gamma = parse_double(value, key);
    } else if (key == "alpha_y") {
      spec.alpha_y = parse_double(value, key);
    } else if (key == "alpha_cap") {
      spec.alpha_max = parse_double(value, key);
    } else if (key == "max_epochs") {
      spec.max_epochs = parse_long(value, key);
    } else if (key == "tol") {
      spec.tol = parse_double(value, key);
    } else if (key == "stop") {
      if (value == "relerr") {
        spec.stop_relerr = true;
      } else if (value == "residual") {
        spec.stop_relerr = false;
      } else {
        throw ConfigError(origin + ": stop must be relerr or residual");
      }
      stop_set = true;
    } else {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!stop_set) spec.stop_relerr = spec.model == Model::L1SK;
  validate(spec);
  return spec;
}

ExperimentSpec parse_experiment_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open experiment config " + path);
  return parse_experiment(is, path);
}

void validate(const ExperimentSpec& spec) {
  if (spec.instances_per_cell < 1) throw ConfigError("instances must be >= 1");
  for (const GridCell& cell : spec.grid) {
    if (cell.m < 1 || cell.n < 1 || cell.r < 1 || cell.lambda <= 0.0 || cell.coherence <= 0.0) {
      throw ConfigError("grid cell has non-positive dimensions or parameters");
    }
  }
  for (const AlgoSpec& algo : spec.algorithms) {
    if (algo.blocks < 1) throw ConfigError("algo blocks must be >= 1");
    if (algo.memory < 0) throw ConfigError("algo memory must be >= 0");
    for (const GridCell& cell : spec.grid) {
      if (algo.blocks > cell.n) throw ConfigError("algo blocks exceed a cell dimension");
    }
  }
}

std::uint64_t derive_instance_seed(std::uint64_t base_seed, std::size_t cell, int instance) {
  // Injective pre-mix of the slot pair, then one finalizer round.
  const std::uint64_t slot =
      static_cast<std::uint64_t>(cell) * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(instance);
  return base_seed ^ mix_seed(slot);
}

namespace {

Instance build_instance(const ExperimentSpec& spec, const GridCell& cell, std::uint64_t seed) {
  if (spec.model == Model::L1SK) {
    const int k = cell.k_norm > 0 ? cell.k_norm : static_cast<int>(cell.r);
    return make_l1sk_instance(cell.m, cell.n, cell.r, cell.coherence, cell.lambda, k, seed);
  }
  return make_l1l2_instance(cell.m, cell.n, cell.r, cell.coherence, cell.lambda, seed);
}

// One (cell, instance) slot: generate once, solve with every algorithm.
void run_slot(const ExperimentSpec& spec, std::size_t cell_idx, int inst_idx,
              std::vector<ResultRow>& rows) {
  const GridCell& cell = spec.grid[cell_idx];
  const std::uint64_t seed = derive_instance_seed(spec.base_seed, cell_idx, inst_idx);

  auto emit = [&](std::size_t algo_idx) -> ResultRow& {
    const std::size_t per_algo = static_cast<std::size_t>(spec.instances_per_cell);
    const std::size_t base = cell_idx * spec.algorithms.size() * per_algo;
    return rows[base + algo_idx * per_algo + static_cast<std::size_t>(inst_idx)];
  };

  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    ResultRow& row = emit(a);
    row.model = spec.model;
    row.cell = cell;
    row.algo = spec.algorithms[a];
    row.seed = seed;
  }

  std::shared_ptr<const Instance> inst;
  try {
    inst = std::make_shared<const Instance>(build_instance(spec, cell, seed));
  } catch (const std::exception&) {
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) emit(a).termination = "Error";
    return;
  }

  for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
    ResultRow& row = emit(a);
    try {
      const AlgoSpec& algo = spec.algorithms[a];
      const FractionalProblem problem = make_problem(inst, algo.blocks);
      SolverConfig cfg = default_config(*inst);
      cfg.memory = algo.memory;
      cfg.schedule = algo.schedule;
      cfg.sigma = spec.sigma;
      cfg.gamma = spec.gamma;
      cfg.alpha_y = spec.alpha_y;
      cfg.alpha_max = spec.alpha_max;
      cfg.max_epochs = spec.max_epochs;
      cfg.seed = mix_seed(seed, 10 + a);
      if (spec.stop_relerr) {
        cfg.stop = relerr_stop(inst->x_true, spec.tol > 0.0 ? spec.tol : 1e-3);
      } else if (inst->model == Model::L1L2) {
        cfg.stop = default_stop(inst);
        if (spec.tol > 0.0) cfg.stop.tol = spec.tol;
      } else {
        cfg.stop = fixed_point_stop(spec.tol > 0.0 ? spec.tol : 1e-5);
      }
      const Eigen::VectorXd x0 = initial_point(*inst, mix_seed(seed, 4));
      const SolveReport rep = solve(problem, x0, cfg);
      row.epochs = static_cast<double>(rep.epochs);
      row.wall_time_sec = rep.wall_time_sec;
      row.final_objective = rep.final_objective;
      row.termination = termination_name(rep.termination);
      row.final_residual = rep.final_residual;
    } catch (const std::exception&) {
      row.termination = "Error";
    }
  }
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int jobs) {
  validate(spec);
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  const std::size_t slots = spec.grid.size() * static_cast<std::size_t>(spec.instances_per_cell);
  std::vector<ResultRow> rows(spec.grid.size() * spec.algorithms.size() *
                              static_cast<std::size_t>(spec.instances_per_cell));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= slots) return;
      const std::size_t cell_idx = slot / static_cast<std::size_t>(spec.instances_per_cell);
      const int inst_idx = static_cast<int>(slot % static_cast<std::size_t>(spec.instances_per_cell));
      run_slot(spec, cell_idx, inst_idx, rows);
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  return rows;
}

std::vector<ResultRow> aggregate(const std::vector<ResultRow>& rows) {
  // Group in first-seen order of (cell, algorithm); rows from run_experiment
  // are already contiguous per group.
  std::vector<ResultRow> means;
  std::vector<std::string> keys;
  auto key_of = [](const ResultRow& r) {
    std::ostringstream key;
    key << r.cell.m << '/' << r.cell.n << '/' << r.cell.r << '/' << r.cell.coherence << '/'
        << r.cell.lambda << '/' << r.algo.name() << '/' << r.algo.blocks << '/' << r.algo.memory;
    return key.str();
  };
  for (const ResultRow& row : rows) {
    if (row.aggregate) continue;
    const std::string key = key_of(row);
    std::size_t idx = keys.size();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i] == key) {
        idx = i;
        break;
      }
    }
    if (idx == keys.size()) {
      keys.push_back(key);
      ResultRow mean;
      mean.aggregate = true;
      mean.model = row.model;
      mean.cell = row.cell;
      mean.algo = row.algo;
      mean.termination = "Mean";
      means.push_back(mean);
    }
    ResultRow& mean = means[idx];
    // Stash counts in the unused fields until finalize.
    if (row.termination != "Error") {
      mean.epochs += row.epochs;
      mean.wall_time_sec += row.wall_time_sec;
      mean.final_objective += row.final_objective;
      mean.final_residual += 1.0;  // non-error count
    }
    if (row.termination == "RelErrMet" || row.termination == "ResidualMet") {
      mean.success_rate += 1.0;
    }
    mean.seed += 1;  // total count
  }
  for (ResultRow& mean : means) {
    const double total = static_cast<double>(mean.seed);
    const double good = mean.final_residual;
    if (good > 0.0) {
      mean.epochs /= good;
      mean.wall_time_sec /= good;
      mean.final_objective /= good;
    }
    mean.success_rate = total > 0.0 ? mean.success_rate / total : 0.0;
    mean.final_residual = 0.0;
    mean.seed = 0;
  }
  return means;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << "row,model,m,n,r,D,lambda,algorithm,blocks,memory,seed,epochs,wall_time_sec,"
        "final_objective,termination,final_residual,success_rate\n";
  for (const ResultRow& r : rows) {
    os << (r.aggregate ? "mean" : "instance") << ',' << model_name(r.model) << ',' << r.cell.m
       << ',' << r.cell.n << ',' << r.cell.r << ',' << format_double(r.cell.coherence) << ','
       << format_double(r.cell.lambda) << ',' << r.algo.name() << ',' << r.algo.blocks << ','
       << r.algo.memory << ',';
    if (!r.aggregate) os << r.seed;
    os << ',' << format_double(r.epochs) << ',' << format_double(r.wall_time_sec) << ','
       << format_double(r.final_objective) << ',' << r.termination << ','
       << format_double(r.final_residual) << ',';
    if (r.aggregate) os << format_double(r.success_rate);
    os << '\n';
  }
}

void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_csv_file: cannot open " + path);
  write_csv(rows, os);
  if (!os) throw std::runtime_error("write_csv_file: write failed for " + path);
}

bool has_error_rows(const std::vector<ResultRow>& rows) {
  for (const ResultRow& r : rows) {
    if (!r.aggregate && r.termination == "Error") return true;
  }
  return false;
}

}  // namespace fracprox
