#include "dvicom/dataset.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dvicom/csv.hpp"

namespace dvicom {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

std::string hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out += kDigits[bytes[i] >> 4];
    out += kDigits[bytes[i] & 0xf];
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  return hex(digest, length);
}

}  // namespace

std::vector<DatasetRecord> load_manifest(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::size_t ref_col = table.column("ref_path");
  const std::size_t test_col = table.column("test_path");
  const std::size_t dmos_col = table.column("dmos");
  const std::size_t imp_col = table.column("impairment");
  const std::size_t db_col = table.column("database");

  std::optional<double> invert;
  for (const auto& directive : table.directives) {
    const std::string d = trim(directive);
    if (d.rfind("invert:", 0) == 0) {
      double max_value = 0.0;
      if (!parse_double(d.substr(7), max_value)) throw DataError("bad invert directive in " + path.string());
      invert = max_value;
    }
  }

  const std::filesystem::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    const std::filesystem::path candidate(trim(p));
    return candidate.is_absolute() ? candidate : base / candidate;
  };

  std::vector<DatasetRecord> records;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + " line " + std::to_string(table.line_numbers[i]);
    double dmos = 0.0;
    if (!parse_double(row[dmos_col], dmos) || !std::isfinite(dmos)) {
      throw DataError(where + ": unparsable dmos '" + row[dmos_col] + "'");
    }
    if (trim(row[ref_col]).empty() || trim(row[test_col]).empty()) throw DataError(where + ": empty image path");
    DatasetRecord rec;
    rec.ref_path = resolve(row[ref_col]);
    rec.test_path = resolve(row[test_col]);
    rec.dmos = invert ? *invert - dmos : dmos;
    rec.impairment = row[imp_col];
    rec.database = row[db_col];
    records.push_back(std::move(rec));
  }
  return records;
}

std::string config_fingerprint(const PipelineConfig& config) {
  const auto& p = config.params;
  std::ostringstream text;
  text << kCodeVersion << ";s=" << csv::format_double(config.s) << ";s_w=" << csv::format_double(config.s_w)
       << ";xi=" << csv::format_double(config.ridge) << ";alpha=" << csv::format_double(config.alpha)
       << ";gamma=" << csv::format_double(p.gamma) << ";upsilon=" << csv::format_double(p.upsilon)
       << ";c=" << csv::format_double(p.c) << ";sigma_v2=" << csv::format_double(p.sigma_v2)
       << ";edge_frac=" << csv::format_double(p.edge_frac) << ";rho_threshold=" << csv::format_double(p.rho_threshold)
       << ";rho_low=" << csv::format_double(p.rho_low) << ";fast=" << (config.fast ? 1 : 0);
  return sha256_hex(text.str()).substr(0, 16);
}

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

std::vector<MetricPair> MetricTable::pairs() const {
  std::vector<MetricPair> out;
  for (const auto& r : rows) out.push_back(r.pair);
  return out;
}

std::vector<double> MetricTable::dmos() const {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.record.dmos);
  return out;
}

std::vector<std::string> MetricTable::impairments() const {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.record.impairment);
  return out;
}

namespace {

std::string row_fields(const MetricRow& r) {
  using csv::escape;
  using csv::format_double;
  return std::to_string(r.id) + "," + escape(r.record.ref_path.string()) + "," +
         escape(r.record.test_path.string()) + "," + format_double(r.record.dmos) + "," +
         escape(r.record.impairment) + "," + escape(r.record.database) + "," + format_double(r.pair.d_minus) + "," +
         format_double(r.pair.d_plus) + "," + format_double(r.pair.lambda_av) + "," +
         format_double(r.pair.mu_av) + "," + r.fingerprint;
}

constexpr const char* kTableHeader =
    "id,ref_path,test_path,dmos,impairment,database,d_minus,d_plus,lambda_av,mu_av,fingerprint";

}  // namespace

std::string table_csv(const MetricTable& table) {
  std::string out = std::string(kTableHeader) + "\n";
  for (const auto& r : table.rows) out += row_fields(r) + "\n";
  return out;
}

void write_table(const MetricTable& table, const std::filesystem::path& path) {
  csv::write_text(path, table_csv(table));
}

MetricTable read_table(const std::filesystem::path& path, const std::string& dmos_column) {
  const csv::Table t = csv::read(path);
  const std::size_t id = t.column("id");
  const std::size_t ref = t.column("ref_path");
  const std::size_t test = t.column("test_path");
  const std::size_t dmos = t.column(dmos_column);
  const std::size_t imp = t.column("impairment");
  const std::size_t db = t.column("database");
  const std::size_t dm = t.column("d_minus");
  const std::size_t dp = t.column("d_plus");
  const std::size_t la = t.column("lambda_av");
  const std::size_t mu = t.column("mu_av");
  const std::size_t fp = t.column("fingerprint");

  MetricTable table;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::string where = path.string() + " line " + std::to_string(t.line_numbers[i]);
    MetricRow row;
    double id_value = 0.0;
    if (!parse_double(f[id], id_value) || !parse_double(f[dmos], row.record.dmos) ||
        !parse_double(f[dm], row.pair.d_minus) || !parse_double(f[dp], row.pair.d_plus) ||
        !parse_double(f[la], row.pair.lambda_av) || !parse_double(f[mu], row.pair.mu_av) ||
        !std::isfinite(row.record.dmos)) {
      throw DataError(where + ": unparsable numeric field");
    }
    row.id = static_cast<std::size_t>(id_value);
    row.record.ref_path = f[ref];
    row.record.test_path = f[test];
    row.record.impairment = f[imp];
    row.record.database = f[db];
    row.fingerprint = f[fp];
    if (!table.rows.empty() && row.fingerprint != table.rows.front().fingerprint) {
      throw DataError(where + ": pipeline fingerprint differs from the first row; tables from different "
                              "configurations cannot be mixed");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

MetricCache::MetricCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) {
    csv::write_text(path_, std::string(kHeader) + "\n");
    return;
  }
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  bool valid = static_cast<bool>(std::getline(in, line)) && line == kHeader;
  if (valid) {
    while (std::getline(in, line)) {
      const auto f = csv::split(line);
      MetricPair pair;
      if (f.size() != 7 || !parse_double(f[3], pair.d_minus) || !parse_double(f[4], pair.d_plus) ||
          !parse_double(f[5], pair.lambda_av) || !parse_double(f[6], pair.mu_av)) {
        valid = false;
        continue;
      }
      entries_.push_back({f[0] + "," + f[1] + "," + f[2], pair});
    }
  }
  if (!valid) {
    rebuilt_ = true;
    std::string text = std::string(kHeader) + "\n";
    for (const auto& e : entries_) {
      text += e.key + "," + csv::format_double(e.pair.d_minus) + "," + csv::format_double(e.pair.d_plus) + "," +
              csv::format_double(e.pair.lambda_av) + "," + csv::format_double(e.pair.mu_av) + "\n";
    }
    csv::write_text(path_, text);
  }
}

std::optional<MetricPair> MetricCache::find(const std::string& hash_ref, const std::string& hash_test,
                                            const std::string& fingerprint) const {
  const std::string key = hash_ref + "," + hash_test + "," + fingerprint;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return it->pair;
  }
  return std::nullopt;
}

void MetricCache::insert(const std::string& hash_ref, const std::string& hash_test, const std::string& fingerprint,
                         const MetricPair& pair) {
  Entry e{hash_ref + "," + hash_test + "," + fingerprint, pair};
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot append to cache " + path_.string());
  out << e.key << "," << csv::format_double(pair.d_minus) << "," << csv::format_double(pair.d_plus) << ","
      << csv::format_double(pair.lambda_av) << "," << csv::format_double(pair.mu_av) << "\n";
  entries_.push_back(std::move(e));
}

BatchResult batch_evaluate(const std::vector<DatasetRecord>& records, const PipelineConfig& config,
                           const std::filesystem::path& cache_path, unsigned workers) {
  config.validate();
  const std::string fingerprint = config_fingerprint(config);
  std::optional<MetricCache> cache;
  if (!cache_path.empty()) cache.emplace(cache_path);

  std::vector<std::optional<MetricPair>> results(records.size());
  std::vector<std::string> errors(records.size());
  std::vector<char> hit(records.size(), 0);
  std::mutex cache_mutex;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const auto& rec = records[i];
      try {
        std::string href, htest;
        if (cache) {
          href = content_hash(rec.ref_path);
          htest = content_hash(rec.test_path);
          std::lock_guard lock(cache_mutex);
          if (auto found = cache->find(href, htest, fingerprint)) {
            results[i] = *found;
            hit[i] = 1;
            continue;
          }
        }
        const MetricPair pair = evaluate_pair(load_luminance(rec.ref_path), load_luminance(rec.test_path), config);
        results[i] = pair;
        if (cache) {
          std::lock_guard lock(cache_mutex);
          cache->insert(href, htest, fingerprint, pair);
        }
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(records.size())));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  BatchResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!results[i]) {
      out.skipped.push_back({i, errors[i]});
      continue;
    }
    (hit[i] ? out.cache_hits : out.computed) += 1;
    out.table.rows.push_back({i, records[i], *results[i], fingerprint});
  }
  return out;
}

Realignment realign_databases(const std::vector<DatabaseTable>& databases, std::size_t anchor) {
  if (databases.size() < 2) throw DataError("realignment needs at least two databases");
  if (anchor >= databases.size()) throw UsageError("anchor index out of range");
  std::vector<JointDataset> joint;
  for (const auto& db : databases) joint.push_back({db.table.pairs(), db.table.dmos(), db.scale_weight});

  Realignment out;
  out.anchor = anchor;
  out.joint = fit_joint_r(joint);
  const QualityModel& target = out.joint.models[anchor];
  for (std::size_t k = 0; k < databases.size(); ++k) {
    const QualityModel& m = out.joint.models[k];
    if (m.a1_plus == 0.0) throw NumericalError("database '" + databases[k].name + "' has zero slope");
    const double ratio = target.a1_plus / m.a1_plus;
    // dmos' = a0_t + ratio * (w * dmos - a0_k)
    out.maps.push_back({target.a0 - ratio * m.a0, ratio * databases[k].scale_weight});
  }
  for (std::size_t k = 0; k < databases.size(); ++k) {
    for (const auto& row : databases[k].table.rows) {
      out.merged.push_back({row, out.maps[k].offset + out.maps[k].slope * row.record.dmos, databases[k].name});
    }
  }
  return out;
}

std::string merged_csv(const Realignment& realignment) {
  std::string out = std::string(kTableHeader) + ",dmos_realigned\n";
  for (const auto& m : realignment.merged) {
    MetricRow row = m.row;
    row.record.database = m.database;
    out += row_fields(row) + "," + csv::format_double(m.dmos_realigned) + "\n";
  }
  return out;
}

}  // namespace dvicom
