#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symphony/inference.hpp"
#include "symphony/simulator.hpp"
#include "symphony/types.hpp"
#include "symphony/version.hpp"

namespace symphony {

/// Tab-separated matrix with a header row; the top-left cell carries an
/// orientation tag (genes_x_cells, regions_x_replicates, clusters_x_regions).
struct MatrixFile {
  std::string path;
  std::string orientation;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;
};

MatrixFile read_matrix_tsv(const std::string& path);

void write_matrix_tsv(const std::string& path, const std::string& orientation,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels,
                      const Eigen::Ref<const Eigen::MatrixXd>& values);

struct MappingRow {
  std::string region;
  std::string target;
  std::string regulator;
  int motif = 0;
  std::optional<double> sign;
};

struct MappingFile {
  std::vector<MappingRow> rows;
  bool has_sign = false;
};

MappingFile read_mapping_tsv(const std::string& path);

void write_mapping_tsv(const std::string& path, const RegulatoryPrior& prior,
                       const std::vector<std::string>& gene_labels,
                       const std::vector<std::string>& region_labels);

/// Dataset plus the label indices the matrices came with.
struct LoadedDataset {
  Dataset data;
  std::vector<std::string> gene_labels;
  std::vector<std::string> cell_labels;
  std::vector<std::string> region_labels;
  std::vector<std::string> replicate_labels;
};

/// Reads the expression and bulk matrices; raw_counts / raw_peaks apply the
/// log(1 + value) transform on ingest.
LoadedDataset load_dataset(const std::string& expr_path, const std::string& bulk_path,
                           bool raw_counts = false, bool raw_peaks = false);

/// Builds the RegulatoryPrior from a mapping file, resolving gene and region
/// names against the dataset labels. Rows without a sign column fall back to
/// the empirical covariance sign of X.
RegulatoryPrior load_regulatory_prior(const std::string& mapping_path,
                                      const LoadedDataset& ds);

/// Serializable snapshot of a fit.
struct Checkpoint {
  int schema_version = kCheckpointSchemaVersion;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_hash;
  Dims dims;
  HyperParams hp;
  LatentState state;
  FitReport report;
};

void write_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::string& path);

void write_ground_truth(const std::string& path, const GroundTruth& gt);
GroundTruth read_ground_truth(const std::string& path);

/// Flat key=value configuration file; '#' starts a comment line.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// FNV-1a hash of the canonicalized key=value lines, as fixed-width hex.
std::string config_hash(const std::map<std::string, std::string>& cfg);

/// Two-column (cell, cluster) label file aligned against cell labels.
Eigen::VectorXi read_labels_tsv(const std::string& path,
                                const std::vector<std::string>& cell_labels);

void write_labels_tsv(const std::string& path, const std::vector<std::string>& cell_labels,
                      const Eigen::VectorXi& z);

}  // namespace symphony
