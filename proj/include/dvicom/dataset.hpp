#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dvicom/metrics.hpp"
#include "dvicom/model.hpp"

namespace dvicom {

struct DatasetRecord {
  std::filesystem::path ref_path;
  std::filesystem::path test_path;
  double dmos = 0.0;
  std::string impairment;
  std::string database;
};

/// Reads a manifest CSV (ref_path,test_path,dmos,impairment,database).
/// Relative paths resolve against the manifest directory. A directive line
/// `# invert: M` converts MOS to DMOS as M - value.
std::vector<DatasetRecord> load_manifest(const std::filesystem::path& path);

inline constexpr const char* kCodeVersion = "dvicom-1.0";

/// Short stable digest of every setting that changes the metric values.
std::string config_fingerprint(const PipelineConfig& config);

/// Hex SHA-256 of a file's bytes.
std::string content_hash(const std::filesystem::path& path);

struct MetricRow {
  std::size_t id = 0;
  DatasetRecord record;
  MetricPair pair;
  std::string fingerprint;
};

struct MetricTable {
  std::vector<MetricRow> rows;

  std::vector<MetricPair> pairs() const;
  std::vector<double> dmos() const;
  std::vector<std::string> impairments() const;
};

/// Header: id,ref_path,test_path,dmos,impairment,database,d_minus,d_plus,lambda_av,mu_av,fingerprint
std::string table_csv(const MetricTable& table);
void write_table(const MetricTable& table, const std::filesystem::path& path);
/// Reads a metric table; `dmos_column` selects the score column.
/// Rows with different fingerprints are rejected.
MetricTable read_table(const std::filesystem::path& path, const std::string& dmos_column = "dmos");

/// Append-only metric cache keyed by (hash_ref, hash_test, fingerprint).
class MetricCache {
 public:
  static constexpr const char* kHeader = "hash_ref,hash_test,fingerprint,d_minus,d_plus,lambda_av,mu_av";

  /// Loads an existing cache; a malformed file is rewritten with its
  /// readable entries (or emptied).
  explicit MetricCache(std::filesystem::path path);

  std::optional<MetricPair> find(const std::string& hash_ref, const std::string& hash_test,
                                 const std::string& fingerprint) const;
  void insert(const std::string& hash_ref, const std::string& hash_test, const std::string& fingerprint,
              const MetricPair& pair);
  bool rebuilt() const { return rebuilt_; }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::string key;
    MetricPair pair;
  };
  std::filesystem::path path_;
  std::vector<Entry> entries_;
  bool rebuilt_ = false;
};

struct SkippedRecord {
  std::size_t id = 0;
  std::string reason;
};

struct BatchResult {
  MetricTable table;
  std::vector<SkippedRecord> skipped;
  std::size_t computed = 0;
  std::size_t cache_hits = 0;
};

/// Evaluates every record; the table is in record order regardless of
/// `workers`. An empty cache path disables caching.
BatchResult batch_evaluate(const std::vector<DatasetRecord>& records, const PipelineConfig& config,
                           const std::filesystem::path& cache_path = {}, unsigned workers = 1);

struct DatabaseTable {
  std::string name;
  MetricTable table;
  double scale_weight = 1.0;
};

/// dmos' = offset + slope * dmos.
struct DmosMap {
  double offset = 0.0;
  double slope = 1.0;
};

struct MergedRow {
  MetricRow row;
  double dmos_realigned = 0.0;
  std::string database;
};

struct Realignment {
  JointFit joint;
  std::size_t anchor = 0;
  std::vector<DmosMap> maps;  ///< per database, onto the anchor scale
  std::vector<MergedRow> merged;
};

/// Fits a shared r and per-database (offset, slope), then maps every
/// database's DMOS onto the anchor's scale.
Realignment realign_databases(const std::vector<DatabaseTable>& databases, std::size_t anchor = 0);

/// Metric-table columns plus dmos_realigned (database column holds the source).
std::string merged_csv(const Realignment& realignment);

}  // namespace dvicom
