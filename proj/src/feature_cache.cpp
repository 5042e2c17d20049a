#include "duet/features.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace duet {

using json = nlohmann::json;

namespace {

json matrix_to_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix<double> matrix_from_json(const json& j, Eigen::Index cols, const char* what) {
  if (!j.is_array()) throw Error(std::string("feature record: '") + what + "' is not an array");
  Matrix<double> m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(std::string("feature record: '") + what + "' row " + std::to_string(r) + " has the wrong width");
    }
    for (std::size_t c = 0; c < row.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
  }
  return m;
}

json mask_to_json(const Mask& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(static_cast<bool>(m(i)));
  return out;
}

Mask mask_from_json(const json& j) {
  Mask m(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) m(static_cast<Eigen::Index>(i)) = j[i].get<bool>();
  return m;
}

}  // namespace

void write_feature_record(std::ostream& out, const FeatureRecord& rec) {
  const auto& m = rec.matrices;
  json j;
  j["schema"] = kFeatureSchemaVersion;
  j["schema_hash"] = feature_schema_hash();
  j["query_id"] = rec.query_id;
  j["doc_id"] = rec.doc_id;
  j["word_features"] = matrix_to_json(m.word_features);
  j["entity_features"] = matrix_to_json(m.entity_features);
  j["word_attention"] = matrix_to_json(m.word_attention);
  j["entity_attention"] = matrix_to_json(m.entity_attention);
  j["word_mask"] = mask_to_json(m.word_mask);
  j["entity_mask"] = mask_to_json(m.entity_mask);
  out << j.dump() << '\n';
}

FeatureRecord parse_feature_record(const std::string& line) {
  try {
    const json j = json::parse(line);
    if (j.at("schema").get<std::string>() != kFeatureSchemaVersion ||
        j.at("schema_hash").get<std::string>() != feature_schema_hash()) {
      throw Error("feature record schema mismatch (expected " + std::string(kFeatureSchemaVersion) + " / " +
                  feature_schema_hash() + ")");
    }
    FeatureRecord rec;
    rec.query_id = j.at("query_id").get<std::string>();
    rec.doc_id = j.at("doc_id").get<std::string>();
    auto& m = rec.matrices;
    m.word_features = matrix_from_json(j.at("word_features"), kWordCols, "word_features");
    m.entity_features = matrix_from_json(j.at("entity_features"), kEntityCols, "entity_features");
    m.word_attention = matrix_from_json(j.at("word_attention"), kWordAttCols, "word_attention");
    m.entity_attention = matrix_from_json(j.at("entity_attention"), kEntityAttCols, "entity_attention");
    m.word_mask = mask_from_json(j.at("word_mask"));
    m.entity_mask = mask_from_json(j.at("entity_mask"));
    m.validate();
    return rec;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed feature record: ") + e.what());
  }
}

std::vector<FeatureRecord> load_feature_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open feature cache " + path);
  std::vector<FeatureRecord> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_feature_record(line));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace duet
