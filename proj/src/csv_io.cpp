#include "manifold/csv_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace manifold {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

template <typename Seq>
std::string join_tuple(const Seq& values) {
  std::string out;
  for (auto v : values) {
    if (!out.empty()) out += ';';
    out += std::to_string(v);
  }
  return out;
}

}  // namespace

void write_spectrum_csv(std::ostream& os, const Spectrum1D<double>& spec, const LatticeShape& shape) {
  os << "mode,k_tuple,lambda\n";
  for (Index f = 0; f < shape.total_sites(); ++f) {
    const auto k = mode_index(f, shape);
    os << f << ',' << join_tuple(k.modes) << ',' << format_double(eigenvalue_product(k, spec, shape)) << '\n';
  }
}

void write_field_csv(std::ostream& os, const FieldConfiguration<double>& field, const LatticeShape& shape) {
  if (field.sites() != shape.total_sites()) throw UsageError("field size does not match shape");
  os << "site_index";
  for (int a = 1; a <= shape.dim(); ++a) os << ",x_" << a;
  for (Index i = 1; i <= field.range_dim(); ++i) os << ",u_" << i;
  os << '\n';
  for (Index s = 0; s < field.sites(); ++s) {
    os << s;
    for (int a = 0; a < shape.dim(); ++a) os << ',' << shape.coordinate(s, a);
    for (Index i = 0; i < field.range_dim(); ++i) os << ',' << format_double(field.values(s, i));
    os << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

FieldFile read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("field CSV: empty input");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "site_index") throw UsageError("field CSV: missing header");
  int dim = 0, range = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] == "x_" + std::to_string(dim + 1) && range == 0) {
      ++dim;
    } else if (header[c] == "u_" + std::to_string(range + 1)) {
      ++range;
    } else {
      throw UsageError("field CSV: unexpected column '" + header[c] + "'");
    }
  }
  if (dim < 1 || range < 1) throw UsageError("field CSV: need x_ and u_ columns");

  std::vector<std::vector<double>> rows;
  int max_coord = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != 1 + dim + range) throw UsageError("field CSV: wrong column count");
    std::vector<double> u(static_cast<std::size_t>(range));
    try {
      if (std::stol(cells[0]) != static_cast<long>(rows.size())) throw UsageError("field CSV: rows out of order");
      for (int a = 0; a < dim; ++a) max_coord = std::max(max_coord, std::abs(std::stoi(cells[static_cast<std::size_t>(1 + a)])));
      for (int i = 0; i < range; ++i) u[static_cast<std::size_t>(i)] = std::stod(cells[static_cast<std::size_t>(1 + dim + i)]);
    } catch (const UsageError&) {
      throw;
    } catch (const std::logic_error&) {
      throw UsageError("field CSV: bad number in row " + std::to_string(rows.size()));
    }
    rows.push_back(std::move(u));
  }
  if (max_coord < 1) throw UsageError("field CSV: no lattice rows");
  FieldFile out{LatticeShape(max_coord, dim), {}};
  if (static_cast<Index>(rows.size()) != out.shape.total_sites()) {
    throw UsageError("field CSV: expected " + std::to_string(out.shape.total_sites()) + " rows, found " +
                     std::to_string(rows.size()));
  }
  out.field.values.resize(out.shape.total_sites(), range);
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (int i = 0; i < range; ++i) out.field.values(static_cast<Index>(s), i) = rows[s][static_cast<std::size_t>(i)];
  }
  return out;
}

void write_histogram_csv(std::ostream& os, const LocalTimeHistogram& hist) {
  os << "z_tuple,count\n";
  const std::size_t dim = hist.lo.size();
  std::vector<int> z(hist.lo);
  for (long count : hist.counts) {
    os << join_tuple(z) << ',' << count << '\n';
    for (std::size_t i = dim; i-- > 0;) {
      if (++z[i] <= hist.hi[i]) break;
      z[i] = hist.lo[i];
    }
  }
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "sweep,energy,radius,accept_site,accept_global";
  for (const auto& name : trace.extra_names) os << ',' << name;
  os << '\n';
  for (const auto& r : trace.rows) {
    os << r.sweep << ',' << format_double(r.energy) << ',' << format_double(r.radius) << ','
       << format_double(r.accept_site) << ',' << format_double(r.accept_global);
    for (double v : r.extras) os << ',' << format_double(v);
    os << '\n';
  }
}

nlohmann::json schedule_to_json(const McmcSchedule& s) {
  return {{"n_sweeps", s.n_sweeps},         {"burn_in", s.burn_in},
          {"thinning", s.thinning},         {"sigma_site", s.sigma_site},
          {"pcn_s", s.pcn_s},               {"global_every", s.global_every},
          {"resync_every", s.resync_every}, {"site_moves", s.site_moves},
          {"tune_sigma", s.tune_sigma},     {"target_accept", s.target_accept}};
}

McmcSchedule schedule_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("schedule must be a JSON object");
  McmcSchedule s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_sweeps") s.n_sweeps = value.get<long>();
      else if (key == "burn_in") s.burn_in = value.get<long>();
      else if (key == "thinning") s.thinning = value.get<long>();
      else if (key == "sigma_site") s.sigma_site = value.get<double>();
      else if (key == "pcn_s") s.pcn_s = value.get<double>();
      else if (key == "global_every") s.global_every = value.get<long>();
      else if (key == "resync_every") s.resync_every = value.get<long>();
      else if (key == "site_moves") s.site_moves = value.get<bool>();
      else if (key == "tune_sigma") s.tune_sigma = value.get<bool>();
      else if (key == "target_accept") s.target_accept = value.get<double>();
      else throw UsageError("unknown schedule key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed schedule: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json params_to_json(const ModelParams& p) {
  return {{"N", p.shape.half_width()}, {"d", p.shape.dim()}, {"D", p.range_dim},
          {"beta", p.beta},            {"gamma", p.gamma},   {"drift_a", p.drift_a}};
}

nlohmann::json summary_to_json(const SeriesSummary& s) {
  return {{"n", s.n},     {"mean", s.mean},           {"variance", s.variance},
          {"iat", s.iat}, {"ess", s.ess},             {"stderr", s.std_error},
          {"degenerate", s.degenerate}, {"low_confidence", s.low_confidence}};
}

nlohmann::json diagnostics_to_json(const ChainDiagnostics& d) {
  nlohmann::json j = {{"energy", summary_to_json(d.energy)},
                      {"radius", summary_to_json(d.radius)},
                      {"accept_site", d.accept_site},
                      {"accept_global", d.accept_global},
                      {"low_confidence", d.low_confidence}};
  for (const auto& [name, s] : d.extras) j["extras"][name] = summary_to_json(s);
  return j;
}

nlohmann::json trace_sidecar(const Trace& trace, const ModelParams& params, const McmcSchedule& schedule) {
  nlohmann::json j = {{"params", params_to_json(params)},
                      {"schedule", schedule_to_json(schedule)},
                      {"seed", trace.seed},
                      {"rows", trace.rows.size()},
                      {"final_sigma_site", trace.final_sigma_site},
                      {"max_resync_divergence", trace.max_resync_divergence},
                      {"aborted", trace.aborted}};
  if (trace.aborted) j["abort_message"] = trace.abort_message;
  if (!trace.rows.empty()) j["diagnostics"] = diagnostics_to_json(diagnostics(trace));
  return j;
}

}  // namespace manifold
