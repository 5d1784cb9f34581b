#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xdesc/bank.hpp"
#include "xdesc/matching.hpp"
#include "xdesc/pair.hpp"
#include "xdesc/scenarios_types.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

// ---------------------------------------------------------------------------
// XDSC v1 descriptor files. Text form:
//   xdsc 1 <name> <dim> <domain> <metric> <norm> <count>
//   <patch_id> <v0> ... <v(dim-1)>
// Binary form: 32-byte magic header, then the same fields little-endian.
// Writers are deterministic for identical inputs.

enum class XdscFormat { text, binary };

void save_xdsc(const std::filesystem::path& path, const DescriptorMatrix& m,
               XdscFormat format = XdscFormat::text);
DescriptorMatrix load_xdsc(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// XMLP v1 model files: a text header with the layer specs followed by the
// parameters and batch-norm running statistics in declaration order as raw
// little-endian float32. A loaded model reproduces eval-mode outputs
// bit-exactly. Pair models add their source/target family lines.

void save_mlp(std::ostream& out, const Mlp<float>& model);
Mlp<float> load_mlp(std::istream& in);
void save_mlp(const std::filesystem::path& path, const Mlp<float>& model);
Mlp<float> load_mlp(const std::filesystem::path& path);

void save_pair(const std::filesystem::path& path, const PairModel& model);
PairModel load_pair(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// XBNK v1 bank files: algorithm manifest plus one XMLP blob per encoder and
// decoder.

void save_bank(const std::filesystem::path& path, const ModelBank& bank);
ModelBank load_bank(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Match TSV: one header line, then "index_a<TAB>index_b<TAB>distance".

void save_matches(const std::filesystem::path& path, const MatchSet& matches);
MatchSet load_matches(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// JSON manifests tying generated files together.

struct FamilyManifestEntry {
  FamilyInfo family;
  double noise_sigma = 0.1;
  int map_hidden = 128;
  std::uint64_t map_seed = 0;
  std::string train_file;
  std::string test_file;
};

struct DatasetManifest {
  int schema_version = 1;
  std::uint64_t seed = 7;
  int latent_dim = 64;
  int n_train = 0;
  int n_test = 0;
  std::vector<FamilyManifestEntry> families;
  std::string views_file;  // empty when no multi-view set was generated
};

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct ImageManifestEntry {
  std::int64_t image_id = 0;
  std::string algo;
  std::string file;
};

struct ImageSetManifest {
  int schema_version = 1;
  bool patch_ids_are_ground_truth = true;
  std::vector<ImageManifestEntry> images;
};

void save_image_manifest(const std::filesystem::path& path, const ImageSetManifest& manifest);
ImageSetManifest load_image_manifest(const std::filesystem::path& path);

// Loads every image named by the manifest (paths relative to the manifest).
ImageSet load_image_set(const std::filesystem::path& manifest_path);

// Builds a training dataset from the manifest's per-family train files.
CorrespondenceDataset load_train_dataset(const DatasetManifest& manifest,
                                         const std::filesystem::path& manifest_path);

// ---------------------------------------------------------------------------
// Deterministic float formatting shared by the text writers: shortest form
// that round-trips float32.
std::string format_float(float v);

}  // namespace xdesc
