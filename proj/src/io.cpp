#include "lpslab/io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace lps {

using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InvalidInput(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.contains("vertices") || !j.contains("edges"))
    throw InvalidInput("model file needs 'vertices' and 'edges' arrays");

  const auto& jv = j["vertices"];
  const int n = static_cast<int>(jv.size());
  Eigen::VectorXd mu(n);
  std::vector<bool> seen(n, false);
  for (const auto& row : jv) {
    if (!row.contains("id") || !row.contains("mu"))
      throw InvalidInput("vertex entries need 'id' and 'mu'");
    const int id = row["id"].get<int>();
    if (id < 0 || id >= n || seen[id])
      throw InvalidInput("vertex ids must be exactly 0..n-1, each once");
    seen[id] = true;
    mu[id] = row["mu"].get<double>();
  }

  std::vector<Edge> edges;
  for (const auto& row : j["edges"]) {
    Edge e;
    e.u = row.at("u").get<int>();
    e.v = row.at("v").get<int>();
    e.w = row.value("w", 1.0);
    e.len = row.value("len", 1.0);
    edges.push_back(e);
  }

  ModelFile out;
  out.manifold = std::make_shared<DiscreteManifold>(
      DiscreteManifold::from_parts(std::move(mu), std::move(edges)));
  if (j.contains("potential")) {
    const auto& jp = j["potential"];
    PotentialSplit V = PotentialSplit::zero(n);
    const auto read = [&](const char* key, Eigen::VectorXd& dst) {
      if (!jp.contains(key)) return;
      if (static_cast<int>(jp[key].size()) != n)
        throw InvalidInput("potential arrays must have one entry per vertex");
      for (int i = 0; i < n; ++i) dst[i] = jp[key][i].get<double>();
    };
    read("vplus", V.vplus);
    read("vminus", V.vminus);
    out.potential = std::move(V);
  }
  return out;
}

void save_model(const std::string& path, const DiscreteManifold& M,
                const PotentialSplit* V) {
  ordered_json j;
  j["vertices"] = ordered_json::array();
  for (int i = 0; i < M.vertex_count(); ++i)
    j["vertices"].push_back({{"id", i}, {"mu", M.mu(i)}});
  j["edges"] = ordered_json::array();
  for (const Edge& e : M.edges())
    j["edges"].push_back({{"u", e.u}, {"v", e.v}, {"w", e.w}, {"len", e.len}});
  if (V) {
    j["potential"]["vplus"] = std::vector<double>(V->vplus.begin(), V->vplus.end());
    j["potential"]["vminus"] = std::vector<double>(V->vminus.begin(), V->vminus.end());
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write model file: " + path);
  out << j.dump(2) << "\n";
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write csv: " + path);
  for (size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << columns[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

void write_field_csv(const std::string& path, const Eigen::VectorXd& values,
                     const std::string& engine, double truncation) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write csv: " + path);
  out << "vertex,value,engine,truncation_estimate\n";
  for (int i = 0; i < values.size(); ++i)
    out << i << "," << format_double(values[i]) << "," << engine << ","
        << format_double(truncation) << "\n";
}

void write_edge_csv(const std::string& path, const DiscreteManifold& M,
                    const Eigen::VectorXd& values) {
  if (values.size() != M.edge_count())
    throw InvalidInput("edge field length does not match the model");
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write csv: " + path);
  out << "u,v,value\n";
  for (int i = 0; i < values.size(); ++i)
    out << M.edges()[i].u << "," << M.edges()[i].v << ","
        << format_double(values[i]) << "\n";
}

}  // namespace lps
