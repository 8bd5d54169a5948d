#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lpslab/manifold.hpp"

namespace lps {

struct ModelFile {
  std::shared_ptr<const DiscreteManifold> manifold;
  std::optional<PotentialSplit> potential;
};

// Model file layout (JSON):
//   { "vertices": [{"id": 0, "mu": 1.0}, ...],
//     "edges":    [{"u": 0, "v": 1, "w": 1.0, "len": 1.0}, ...],
//     "potential": {"vplus": [...], "vminus": [...]} }   (optional)
// Vertex ids must be exactly 0..n-1; edges are undirected, listed once.
ModelFile load_model(const std::string& path);
void save_model(const std::string& path, const DiscreteManifold& M,
                const PotentialSplit* V = nullptr);

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// Per-vertex functional values:  vertex,value,engine,truncation_estimate
void write_field_csv(const std::string& path, const Eigen::VectorXd& values,
                     const std::string& engine, double truncation);

// Per-edge values:  u,v,value
void write_edge_csv(const std::string& path, const DiscreteManifold& M,
                    const Eigen::VectorXd& values);

}  // namespace lps
