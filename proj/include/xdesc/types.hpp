#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xdesc/errors.hpp"

namespace xdesc {

template <class T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatrixF = MatrixX<float>;
using VectorF = VectorX<float>;

enum class Domain { real, binary };
enum class Metric { l2, hamming };
enum class OutputNorm { none, unit_l2 };

// Final activation of a network producing descriptors of a family.
enum class OutputHead { none, sigmoid, unit_l2, relu_unit_l2 };

std::string to_string(Domain d);
std::string to_string(Metric m);
std::string to_string(OutputNorm n);
std::string to_string(OutputHead h);
Domain domain_from_string(std::string_view s);
Metric metric_from_string(std::string_view s);
OutputNorm norm_from_string(std::string_view s);
OutputHead head_from_string(std::string_view s);

// Metadata of one description algorithm (a descriptor family).
struct AlgorithmSpec {
  std::string name;
  int dim = 0;
  Domain domain = Domain::real;
  Metric metric = Metric::l2;
  OutputNorm output_norm = OutputNorm::none;

  bool operator==(const AlgorithmSpec&) const = default;

  // dim >= 1; binary implies hamming metric and no output norm; real implies l2.
  void validate() const;
};

// Default network head for a family: binary targets train against sigmoid
// probabilities, unit-norm families get a normalizing head. Families whose
// descriptors are also non-negative (SIFT-like) override this with
// relu_unit_l2 via FamilyInfo.
OutputHead default_head(const AlgorithmSpec& spec);

// A family plus the knobs that follow it through training: which head its
// decoders/translators use and the hidden sizes of its networks.
struct FamilyInfo {
  AlgorithmSpec spec;
  OutputHead head = OutputHead::none;
  std::vector<int> hidden = {256, 256};

  bool operator==(const FamilyInfo&) const = default;
};

FamilyInfo make_family_info(const AlgorithmSpec& spec);

// N descriptors of one family, row k described by patch_ids[k].
struct DescriptorMatrix {
  AlgorithmSpec spec;
  std::vector<std::int64_t> patch_ids;
  MatrixF values;
  bool finalized = false;

  Eigen::Index rows() const { return values.rows(); }

  void validate() const;
};

// Patch-aligned descriptor matrices for several families over one shared
// patch-id list. Alignment is by id, not by source row order.
struct CorrespondenceDataset {
  struct Entry {
    FamilyInfo family;
    MatrixF values;  // rows aligned with patch_ids
  };

  std::vector<std::int64_t> patch_ids;
  std::vector<Entry> entries;

  std::size_t size() const { return patch_ids.size(); }
  const Entry* find(std::string_view name) const;
  const Entry& at(std::string_view name) const;  // DatasetError if missing
};

// Aligns the given matrices on the intersection of their patch ids (sorted
// ascending). Throws DatasetError if fewer than two common patches remain.
CorrespondenceDataset make_dataset(std::span<const DescriptorMatrix> matrices,
                                   std::span<const FamilyInfo> families);
CorrespondenceDataset make_dataset(std::span<const DescriptorMatrix> matrices);

}  // namespace xdesc
