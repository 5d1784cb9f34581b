#include "xdesc/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace xdesc {

std::string to_string(Domain d) {
  return d == Domain::real ? "real" : "binary";
}

std::string to_string(Metric m) {
  return m == Metric::l2 ? "l2" : "hamming";
}

std::string to_string(OutputNorm n) {
  return n == OutputNorm::none ? "none" : "unit_l2";
}

std::string to_string(OutputHead h) {
  switch (h) {
    case OutputHead::none: return "none";
    case OutputHead::sigmoid: return "sigmoid";
    case OutputHead::unit_l2: return "unit_l2";
    case OutputHead::relu_unit_l2: return "relu_unit_l2";
  }
  return "none";
}

Domain domain_from_string(std::string_view s) {
  if (s == "real") return Domain::real;
  if (s == "binary") return Domain::binary;
  throw ParseError("unknown domain '" + std::string(s) + "'");
}

Metric metric_from_string(std::string_view s) {
  if (s == "l2") return Metric::l2;
  if (s == "hamming") return Metric::hamming;
  throw ParseError("unknown metric '" + std::string(s) + "'");
}

OutputNorm norm_from_string(std::string_view s) {
  if (s == "none") return OutputNorm::none;
  if (s == "unit_l2") return OutputNorm::unit_l2;
  throw ParseError("unknown norm '" + std::string(s) + "'");
}

OutputHead head_from_string(std::string_view s) {
  if (s == "none") return OutputHead::none;
  if (s == "sigmoid") return OutputHead::sigmoid;
  if (s == "unit_l2") return OutputHead::unit_l2;
  if (s == "relu_unit_l2") return OutputHead::relu_unit_l2;
  throw ParseError("unknown head '" + std::string(s) + "'");
}

void AlgorithmSpec::validate() const {
  if (name.empty()) throw ConfigError("algorithm spec: empty name");
  if (dim < 1) throw ConfigError("algorithm spec '" + name + "': dim must be >= 1");
  if (domain == Domain::binary) {
    if (metric != Metric::hamming)
      throw ConfigError("algorithm spec '" + name + "': binary domain requires hamming metric");
    if (output_norm != OutputNorm::none)
      throw ConfigError("algorithm spec '" + name + "': binary domain forbids output norm");
  } else {
    if (metric != Metric::l2)
      throw ConfigError("algorithm spec '" + name + "': real domain requires l2 metric");
  }
}

OutputHead default_head(const AlgorithmSpec& spec) {
  if (spec.domain == Domain::binary) return OutputHead::sigmoid;
  if (spec.output_norm == OutputNorm::unit_l2) return OutputHead::unit_l2;
  return OutputHead::none;
}

FamilyInfo make_family_info(const AlgorithmSpec& spec) {
  FamilyInfo info;
  info.spec = spec;
  info.head = default_head(spec);
  return info;
}

void DescriptorMatrix::validate() const {
  spec.validate();
  if (values.cols() != spec.dim)
    throw ShapeError("descriptor matrix '" + spec.name + "': width " +
                     std::to_string(values.cols()) + " != dim " + std::to_string(spec.dim));
  if (values.rows() != static_cast<Eigen::Index>(patch_ids.size()))
    throw ShapeError("descriptor matrix '" + spec.name + "': rows != patch id count");
  std::unordered_set<std::int64_t> seen;
  seen.reserve(patch_ids.size());
  for (std::int64_t id : patch_ids) {
    if (!seen.insert(id).second)
      throw DomainError("descriptor matrix '" + spec.name + "': duplicate patch id " +
                        std::to_string(id));
  }
  if (!values.allFinite())
    throw NumericsError("descriptor matrix '" + spec.name + "': non-finite values");
  if (spec.domain == Domain::binary) {
    if ((values.array() < 0.0f).any() || (values.array() > 1.0f).any())
      throw DomainError("descriptor matrix '" + spec.name + "': binary values outside [0,1]");
  }
  if (finalized && spec.output_norm == OutputNorm::unit_l2) {
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      const float n = values.row(r).norm();
      if (std::abs(n - 1.0f) > 1e-5f)
        throw NormalizationError("descriptor matrix '" + spec.name + "': row " +
                                 std::to_string(r) + " norm " + std::to_string(n) +
                                 " not unit");
    }
  }
}

const CorrespondenceDataset::Entry* CorrespondenceDataset::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.family.spec.name == name) return &e;
  }
  return nullptr;
}

const CorrespondenceDataset::Entry& CorrespondenceDataset::at(std::string_view name) const {
  const Entry* e = find(name);
  if (!e) throw DatasetError("dataset does not contain algorithm '" + std::string(name) + "'");
  return *e;
}

CorrespondenceDataset make_dataset(std::span<const DescriptorMatrix> matrices,
                                   std::span<const FamilyInfo> families) {
  if (matrices.empty()) throw DatasetError("dataset requires at least one descriptor matrix");
  if (!families.empty() && families.size() != matrices.size())
    throw DatasetError("family info count does not match matrix count");

  // intersection of patch ids across all matrices
  std::unordered_map<std::int64_t, std::size_t> count;
  for (const auto& m : matrices) {
    std::unordered_set<std::int64_t> ids(m.patch_ids.begin(), m.patch_ids.end());
    for (std::int64_t id : ids) ++count[id];
  }
  std::vector<std::int64_t> common;
  for (const auto& [id, c] : count) {
    if (c == matrices.size()) common.push_back(id);
  }
  std::sort(common.begin(), common.end());
  if (common.size() < 2)
    throw DatasetError("fewer than two patch ids shared by all algorithms");

  CorrespondenceDataset ds;
  ds.patch_ids = common;
  ds.entries.reserve(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const DescriptorMatrix& m = matrices[k];
    std::unordered_map<std::int64_t, Eigen::Index> row_of;
    row_of.reserve(m.patch_ids.size());
    for (std::size_t r = 0; r < m.patch_ids.size(); ++r)
      row_of[m.patch_ids[r]] = static_cast<Eigen::Index>(r);

    CorrespondenceDataset::Entry entry;
    entry.family = families.empty() ? make_family_info(m.spec) : families[k];
    if (entry.family.spec != m.spec)
      throw DatasetError("family info for '" + m.spec.name + "' does not match matrix spec");
    entry.values.resize(static_cast<Eigen::Index>(common.size()), m.values.cols());
    for (std::size_t r = 0; r < common.size(); ++r)
      entry.values.row(static_cast<Eigen::Index>(r)) = m.values.row(row_of.at(common[r]));
    ds.entries.push_back(std::move(entry));
  }
  return ds;
}

CorrespondenceDataset make_dataset(std::span<const DescriptorMatrix> matrices) {
  return make_dataset(matrices, {});
}

}  // namespace xdesc
