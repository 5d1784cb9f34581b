#include "xdesc/io.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace xdesc {

using nlohmann::json;

namespace {

constexpr char kXdscBinaryMagic[32] = "XDSC-BINARY-v1";

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& in, const char* field) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ParseError(std::string("unexpected end of file reading '") + field + "'");
  return v;
}

std::string next_token(std::istringstream& line, const char* field) {
  std::string tok;
  if (!(line >> tok))
    throw ParseError(std::string("missing field '") + field + "'");
  return tok;
}

long long parse_int(const std::string& tok, const char* field) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("field '") + field + "' is not an integer: '" + tok + "'");
  }
}

float parse_float(const std::string& tok, const char* field) {
  try {
    std::size_t used = 0;
    const float v = std::stof(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("field '") + field + "' is not a number: '" + tok + "'");
  }
}

std::string required_line(std::istream& in, const char* field) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(std::string("unexpected end of file before '") + field + "'");
  return line;
}

}  // namespace

std::string format_float(float v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.9g", static_cast<double>(v));
  return std::string(buf.data());
}

// ---------------------------------------------------------------------------
// XDSC

void save_xdsc(const std::filesystem::path& path, const DescriptorMatrix& m,
               XdscFormat format) {
  m.validate();
  std::ofstream out = open_out(path);
  const auto& spec = m.spec;
  if (format == XdscFormat::text) {
    out << "xdsc 1 " << spec.name << ' ' << spec.dim << ' ' << to_string(spec.domain) << ' '
        << to_string(spec.metric) << ' ' << to_string(spec.output_norm) << ' '
        << m.patch_ids.size() << '\n';
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      out << m.patch_ids[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < m.values.cols(); ++c)
        out << ' ' << format_float(m.values(r, c));
      out << '\n';
    }
  } else {
    out.write(kXdscBinaryMagic, sizeof(kXdscBinaryMagic));
    const std::uint32_t name_len = static_cast<std::uint32_t>(spec.name.size());
    write_raw(out, name_len);
    out.write(spec.name.data(), name_len);
    write_raw(out, static_cast<std::uint32_t>(spec.dim));
    write_raw(out, static_cast<std::uint8_t>(spec.domain));
    write_raw(out, static_cast<std::uint8_t>(spec.metric));
    write_raw(out, static_cast<std::uint8_t>(spec.output_norm));
    write_raw(out, static_cast<std::uint64_t>(m.patch_ids.size()));
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      write_raw(out, m.patch_ids[static_cast<std::size_t>(r)]);
      out.write(reinterpret_cast<const char*>(m.values.row(r).data()),
                static_cast<std::streamsize>(sizeof(float)) * m.values.cols());
    }
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

DescriptorMatrix load_xdsc(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  char probe[5] = {};
  if (!in.read(probe, 5)) throw ParseError("'" + path.string() + "': file too short");

  DescriptorMatrix m;
  if (std::memcmp(probe, "xdsc ", 5) == 0) {
    in.seekg(0);
    std::istringstream header(required_line(in, "header"));
    next_token(header, "magic");
    const long long version = parse_int(next_token(header, "version"), "version");
    if (version != 1) throw ParseError("unsupported xdsc version " + std::to_string(version));
    m.spec.name = next_token(header, "name");
    m.spec.dim = static_cast<int>(parse_int(next_token(header, "dim"), "dim"));
    m.spec.domain = domain_from_string(next_token(header, "domain"));
    m.spec.metric = metric_from_string(next_token(header, "metric"));
    m.spec.output_norm = norm_from_string(next_token(header, "norm"));
    const long long count = parse_int(next_token(header, "count"), "count");
    if (count < 0) throw ParseError("negative record count");
    m.patch_ids.resize(static_cast<std::size_t>(count));
    m.values.resize(static_cast<Eigen::Index>(count), m.spec.dim);
    for (long long r = 0; r < count; ++r) {
      std::istringstream rec(required_line(in, "record"));
      m.patch_ids[static_cast<std::size_t>(r)] =
          parse_int(next_token(rec, "patch_id"), "patch_id");
      for (int c = 0; c < m.spec.dim; ++c)
        m.values(static_cast<Eigen::Index>(r), c) =
            parse_float(next_token(rec, "value"), "value");
    }
  } else {
    in.seekg(0);
    char magic[sizeof(kXdscBinaryMagic)] = {};
    if (!in.read(magic, sizeof(magic)) ||
        std::memcmp(magic, kXdscBinaryMagic, sizeof(magic)) != 0)
      throw ParseError("'" + path.string() + "': not an xdsc file (bad magic)");
    const auto name_len = read_raw<std::uint32_t>(in, "name length");
    if (name_len > 4096) throw ParseError("unreasonable name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw ParseError("unexpected end of file in 'name'");
    m.spec.name = name;
    m.spec.dim = static_cast<int>(read_raw<std::uint32_t>(in, "dim"));
    m.spec.domain = static_cast<Domain>(read_raw<std::uint8_t>(in, "domain"));
    m.spec.metric = static_cast<Metric>(read_raw<std::uint8_t>(in, "metric"));
    m.spec.output_norm = static_cast<OutputNorm>(read_raw<std::uint8_t>(in, "norm"));
    const auto count = read_raw<std::uint64_t>(in, "count");
    m.patch_ids.resize(count);
    m.values.resize(static_cast<Eigen::Index>(count), m.spec.dim);
    for (std::uint64_t r = 0; r < count; ++r) {
      m.patch_ids[r] = read_raw<std::int64_t>(in, "patch_id");
      if (!in.read(reinterpret_cast<char*>(m.values.row(static_cast<Eigen::Index>(r)).data()),
                   static_cast<std::streamsize>(sizeof(float)) * m.spec.dim))
        throw ParseError("unexpected end of file in 'values'");
    }
  }
  m.finalized = true;
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// XMLP

namespace {

void write_spec_line(std::ostream& out, const char* key, const FamilyInfo& fam) {
  out << key << ' ' << fam.spec.name << ' ' << fam.spec.dim << ' '
      << to_string(fam.spec.domain) << ' ' << to_string(fam.spec.metric) << ' '
      << to_string(fam.spec.output_norm) << ' ' << to_string(fam.head);
  out << ' ' << fam.hidden.size();
  for (int h : fam.hidden) out << ' ' << h;
  out << '\n';
}

FamilyInfo parse_spec_line(std::istringstream& line) {
  FamilyInfo fam;
  fam.spec.name = next_token(line, "name");
  fam.spec.dim = static_cast<int>(parse_int(next_token(line, "dim"), "dim"));
  fam.spec.domain = domain_from_string(next_token(line, "domain"));
  fam.spec.metric = metric_from_string(next_token(line, "metric"));
  fam.spec.output_norm = norm_from_string(next_token(line, "norm"));
  fam.head = head_from_string(next_token(line, "head"));
  const long long nh = parse_int(next_token(line, "hidden count"), "hidden count");
  fam.hidden.clear();
  for (long long k = 0; k < nh; ++k)
    fam.hidden.push_back(static_cast<int>(parse_int(next_token(line, "hidden"), "hidden")));
  return fam;
}

std::size_t layer_param_floats(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::linear:
      return static_cast<std::size_t>(spec.in_dim) * spec.out_dim + spec.out_dim;
    case LayerKind::batchnorm:
      return 4u * static_cast<std::size_t>(spec.out_dim);
    default:
      return 0;
  }
}

void write_mlp_prologue(std::ostream& out, const Mlp<float>& model) {
  out << "xmlp 1\n";
  out << "mode " << (model.mode == RunMode::train ? "train" : "eval") << '\n';
  out << "bn " << format_float(model.bn_momentum) << ' ' << format_float(model.bn_eps) << ' '
      << (model.bn_batch_stats_at_eval ? 1 : 0) << '\n';
}

void write_mlp_layers_and_data(std::ostream& out, const Mlp<float>& model) {
  out << "layers " << model.layers.size() << '\n';
  std::size_t total_floats = 0;
  for (const auto& layer : model.layers) {
    out << "layer " << to_string(layer.spec.kind) << ' ' << layer.spec.in_dim << ' '
        << layer.spec.out_dim << '\n';
    total_floats += layer_param_floats(layer.spec);
  }
  out << "data " << total_floats * sizeof(float) << '\n';
  for (const auto& layer : model.layers) {
    if (layer.spec.kind == LayerKind::linear) {
      out.write(reinterpret_cast<const char*>(layer.weight.data()),
                static_cast<std::streamsize>(sizeof(float)) * layer.weight.size());
      out.write(reinterpret_cast<const char*>(layer.bias.data()),
                static_cast<std::streamsize>(sizeof(float)) * layer.bias.size());
    } else if (layer.spec.kind == LayerKind::batchnorm) {
      for (const VectorF* v :
           {&layer.gamma, &layer.beta, &layer.running_mean, &layer.running_var})
        out.write(reinterpret_cast<const char*>(v->data()),
                  static_cast<std::streamsize>(sizeof(float)) * v->size());
    }
  }
}

}  // namespace

void save_mlp(std::ostream& out, const Mlp<float>& model) {
  write_mlp_prologue(out, model);
  write_mlp_layers_and_data(out, model);
}

namespace {

Mlp<float> load_mlp_header_and_blob(std::istream& in, FamilyInfo* src, FamilyInfo* dst,
                                    std::vector<std::pair<std::string, std::string>>* meta) {
  std::istringstream magic_line(required_line(in, "magic"));
  if (next_token(magic_line, "magic") != "xmlp")
    throw ParseError("not an xmlp stream (bad magic)");
  if (parse_int(next_token(magic_line, "version"), "version") != 1)
    throw ParseError("unsupported xmlp version");

  Mlp<float> model;
  long long n_layers = -1;
  long long data_bytes = -1;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "mode") {
      const std::string mode = next_token(ls, "mode");
      if (mode == "train") model.mode = RunMode::train;
      else if (mode == "eval") model.mode = RunMode::eval;
      else throw ParseError("unknown mode '" + mode + "'");
    } else if (key == "bn") {
      model.bn_momentum = parse_float(next_token(ls, "bn momentum"), "bn momentum");
      model.bn_eps = parse_float(next_token(ls, "bn eps"), "bn eps");
      model.bn_batch_stats_at_eval =
          parse_int(next_token(ls, "bn flag"), "bn flag") != 0;
    } else if (key == "layers") {
      n_layers = parse_int(next_token(ls, "layer count"), "layer count");
    } else if (key == "layer") {
      Layer<float> layer;
      layer.spec.kind = layer_kind_from_string(next_token(ls, "layer kind"));
      layer.spec.in_dim = static_cast<int>(parse_int(next_token(ls, "in_dim"), "in_dim"));
      layer.spec.out_dim = static_cast<int>(parse_int(next_token(ls, "out_dim"), "out_dim"));
      model.layers.push_back(std::move(layer));
    } else if (key == "src_spec") {
      if (src) *src = parse_spec_line(ls);
    } else if (key == "dst_spec") {
      if (dst) *dst = parse_spec_line(ls);
    } else if (key == "meta") {
      const std::string mk = next_token(ls, "meta key");
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      if (meta) meta->emplace_back(mk, rest);
    } else if (key == "data") {
      data_bytes = parse_int(next_token(ls, "data bytes"), "data bytes");
      break;
    } else {
      throw ParseError("unknown xmlp header field '" + key + "'");
    }
  }
  if (n_layers < 0) throw ParseError("missing field 'layers'");
  if (data_bytes < 0) throw ParseError("missing field 'data'");
  if (static_cast<std::size_t>(n_layers) != model.layers.size())
    throw ParseError("layer count does not match declared 'layers'");

  std::size_t expected = 0;
  for (const auto& layer : model.layers) expected += layer_param_floats(layer.spec);
  if (static_cast<std::size_t>(data_bytes) != expected * sizeof(float))
    throw ParseError("field 'data' size does not match layer specs");

  for (auto& layer : model.layers) {
    if (layer.spec.kind == LayerKind::linear) {
      layer.weight.resize(layer.spec.out_dim, layer.spec.in_dim);
      layer.bias.resize(layer.spec.out_dim);
      if (!in.read(reinterpret_cast<char*>(layer.weight.data()),
                   static_cast<std::streamsize>(sizeof(float)) * layer.weight.size()) ||
          !in.read(reinterpret_cast<char*>(layer.bias.data()),
                   static_cast<std::streamsize>(sizeof(float)) * layer.bias.size()))
        throw ParseError("unexpected end of file in parameter data");
    } else if (layer.spec.kind == LayerKind::batchnorm) {
      for (VectorF* v : {&layer.gamma, &layer.beta, &layer.running_mean, &layer.running_var}) {
        v->resize(layer.spec.out_dim);
        if (!in.read(reinterpret_cast<char*>(v->data()),
                     static_cast<std::streamsize>(sizeof(float)) * v->size()))
          throw ParseError("unexpected end of file in batch-norm data");
      }
    }
  }
  return model;
}

}  // namespace

Mlp<float> load_mlp(std::istream& in) {
  return load_mlp_header_and_blob(in, nullptr, nullptr, nullptr);
}

void save_mlp(const std::filesystem::path& path, const Mlp<float>& model) {
  std::ofstream out = open_out(path);
  save_mlp(out, model);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

Mlp<float> load_mlp(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return load_mlp(in);
}

void save_pair(const std::filesystem::path& path, const PairModel& model) {
  std::ofstream out = open_out(path);
  write_mlp_prologue(out, model.net);
  write_spec_line(out, "src_spec", model.src);
  write_spec_line(out, "dst_spec", model.dst);
  out << "meta seed " << model.trained_with.seed << '\n';
  out << "meta epochs " << model.trained_with.epochs << '\n';
  out << "meta batch " << model.trained_with.batch << '\n';
  out << "meta lr " << format_float(model.trained_with.lr) << '\n';
  out << "meta final_train_loss " << format_float(model.final_train_loss) << '\n';
  write_mlp_layers_and_data(out, model.net);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

PairModel load_pair(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  PairModel model;
  FamilyInfo src, dst;
  std::vector<std::pair<std::string, std::string>> meta;
  model.net = load_mlp_header_and_blob(in, &src, &dst, &meta);
  if (src.spec.name.empty())
    throw ParseError("'" + path.string() + "': missing field 'src_spec' (not a pair model)");
  if (dst.spec.name.empty())
    throw ParseError("'" + path.string() + "': missing field 'dst_spec' (not a pair model)");
  model.src = src;
  model.dst = dst;
  for (const auto& [k, v] : meta) {
    if (k == "seed") model.trained_with.seed = static_cast<std::uint64_t>(parse_int(v, "seed"));
    else if (k == "epochs") model.trained_with.epochs = static_cast<int>(parse_int(v, "epochs"));
    else if (k == "batch") model.trained_with.batch = static_cast<int>(parse_int(v, "batch"));
    else if (k == "lr") model.trained_with.lr = parse_float(v, "lr");
    else if (k == "final_train_loss") model.final_train_loss = parse_float(v, "final_train_loss");
  }
  return model;
}

// ---------------------------------------------------------------------------
// XBNK

void save_bank(const std::filesystem::path& path, const ModelBank& bank) {
  std::ofstream out = open_out(path);
  out << "xbnk 1\n";
  out << "embed_dim " << bank.embed_dim << '\n';
  out << "loss " << format_float(bank.loss_cfg.alpha) << ' '
      << format_float(bank.loss_cfg.margin) << ' ' << to_string(bank.loss_cfg.variant) << ' '
      << (bank.loss_cfg.diagonal_matching ? 1 : 0) << '\n';
  out << "meta seed " << bank.trained_with.seed << '\n';
  out << "meta epochs " << bank.trained_with.epochs << '\n';
  out << "meta batch " << bank.trained_with.batch << '\n';
  out << "meta lr " << format_float(bank.trained_with.lr) << '\n';
  out << "meta final_objective " << format_float(bank.final_objective) << '\n';
  out << "families " << bank.families.size() << '\n';
  for (const auto& fam : bank.families) write_spec_line(out, "family", fam);
  for (std::size_t k = 0; k < bank.families.size(); ++k) {
    for (const Mlp<float>* net : {&bank.encoders[k], &bank.decoders[k]}) {
      std::ostringstream blob;
      save_mlp(blob, *net);
      const std::string bytes = blob.str();
      out << "blob " << bytes.size() << '\n';
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
  }
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

ModelBank load_bank(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::istringstream magic_line(required_line(in, "magic"));
  if (next_token(magic_line, "magic") != "xbnk")
    throw ParseError("'" + path.string() + "': not an xbnk file (bad magic)");
  if (parse_int(next_token(magic_line, "version"), "version") != 1)
    throw ParseError("unsupported xbnk version");

  ModelBank bank;
  long long n_families = -1;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "embed_dim") {
      bank.embed_dim = static_cast<int>(parse_int(next_token(ls, "embed_dim"), "embed_dim"));
    } else if (key == "loss") {
      bank.loss_cfg.alpha = parse_float(next_token(ls, "alpha"), "alpha");
      bank.loss_cfg.margin = parse_float(next_token(ls, "margin"), "margin");
      bank.loss_cfg.variant = variant_from_string(next_token(ls, "variant"));
      bank.loss_cfg.diagonal_matching =
          parse_int(next_token(ls, "diagonal flag"), "diagonal flag") != 0;
    } else if (key == "meta") {
      const std::string mk = next_token(ls, "meta key");
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      if (mk == "seed") bank.trained_with.seed = static_cast<std::uint64_t>(parse_int(rest, "seed"));
      else if (mk == "epochs") bank.trained_with.epochs = static_cast<int>(parse_int(rest, "epochs"));
      else if (mk == "batch") bank.trained_with.batch = static_cast<int>(parse_int(rest, "batch"));
      else if (mk == "lr") bank.trained_with.lr = parse_float(rest, "lr");
      else if (mk == "final_objective") bank.final_objective = parse_float(rest, "final_objective");
    } else if (key == "families") {
      n_families = parse_int(next_token(ls, "family count"), "family count");
    } else if (key == "family") {
      bank.families.push_back(parse_spec_line(ls));
    } else if (key == "blob") {
      // first blob line; rewind handled below
      if (n_families < 0) throw ParseError("missing field 'families'");
      if (static_cast<long long>(bank.families.size()) != n_families)
        throw ParseError("family count does not match declared 'families'");
      const long long bytes = parse_int(next_token(ls, "blob bytes"), "blob bytes");
      std::string blob(static_cast<std::size_t>(bytes), '\0');
      if (!in.read(blob.data(), bytes)) throw ParseError("unexpected end of file in blob");
      std::istringstream bs(blob);
      bank.encoders.push_back(load_mlp(bs));
      // remaining blobs alternate decoder/encoder per family
      while (bank.decoders.size() < bank.families.size()) {
        std::string blob_line = required_line(in, "blob");
        std::istringstream bl(blob_line);
        if (next_token(bl, "blob") != "blob") throw ParseError("expected 'blob' line");
        const long long nb = parse_int(next_token(bl, "blob bytes"), "blob bytes");
        std::string data(static_cast<std::size_t>(nb), '\0');
        if (!in.read(data.data(), nb)) throw ParseError("unexpected end of file in blob");
        std::istringstream ds(data);
        if (bank.encoders.size() > bank.decoders.size())
          bank.decoders.push_back(load_mlp(ds));
        else
          bank.encoders.push_back(load_mlp(ds));
      }
      break;
    } else {
      throw ParseError("unknown xbnk header field '" + key + "'");
    }
  }
  if (bank.families.empty()) throw ParseError("bank has no families");
  if (bank.encoders.size() != bank.families.size() ||
      bank.decoders.size() != bank.families.size())
    throw ParseError("bank blob count does not match family count");
  return bank;
}

// ---------------------------------------------------------------------------
// Matches TSV

void save_matches(const std::filesystem::path& path, const MatchSet& matches) {
  std::ofstream out = open_out(path);
  out << "index_a\tindex_b\tdistance\n";
  for (const Match& m : matches.pairs)
    out << m.index_a << '\t' << m.index_b << '\t' << format_float(m.distance) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

MatchSet load_matches(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  MatchSet set;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "': empty matches file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Match m;
    m.index_a = parse_int(next_token(ls, "index_a"), "index_a");
    m.index_b = parse_int(next_token(ls, "index_b"), "index_b");
    m.distance = parse_float(next_token(ls, "distance"), "distance");
    set.pairs.push_back(m);
  }
  return set;
}

// ---------------------------------------------------------------------------
// JSON manifests

namespace {

json family_to_json(const FamilyManifestEntry& e) {
  json j;
  j["name"] = e.family.spec.name;
  j["dim"] = e.family.spec.dim;
  j["domain"] = to_string(e.family.spec.domain);
  j["metric"] = to_string(e.family.spec.metric);
  j["norm"] = to_string(e.family.spec.output_norm);
  j["head"] = to_string(e.family.head);
  j["hidden"] = e.family.hidden;
  j["noise_sigma"] = e.noise_sigma;
  j["map_hidden"] = e.map_hidden;
  j["map_seed"] = e.map_seed;
  j["train_file"] = e.train_file;
  j["test_file"] = e.test_file;
  return j;
}

template <class T>
T json_get(const json& j, const char* field) {
  if (!j.contains(field))
    throw ParseError(std::string("manifest: missing field '") + field + "'");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("manifest: field '") + field + "' has the wrong type");
  }
}

FamilyManifestEntry family_from_json(const json& j) {
  FamilyManifestEntry e;
  e.family.spec.name = json_get<std::string>(j, "name");
  e.family.spec.dim = json_get<int>(j, "dim");
  e.family.spec.domain = domain_from_string(json_get<std::string>(j, "domain"));
  e.family.spec.metric = metric_from_string(json_get<std::string>(j, "metric"));
  e.family.spec.output_norm = norm_from_string(json_get<std::string>(j, "norm"));
  e.family.head = head_from_string(json_get<std::string>(j, "head"));
  e.family.hidden = json_get<std::vector<int>>(j, "hidden");
  e.noise_sigma = json_get<double>(j, "noise_sigma");
  e.map_hidden = json_get<int>(j, "map_hidden");
  e.map_seed = json_get<std::uint64_t>(j, "map_seed");
  e.train_file = json_get<std::string>(j, "train_file");
  e.test_file = json_get<std::string>(j, "test_file");
  e.family.spec.validate();
  return e;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("'" + path.string() + "': invalid JSON: " + e.what());
  }
  return j;
}

}  // namespace

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json j;
  j["schema_version"] = manifest.schema_version;
  j["seed"] = manifest.seed;
  j["latent_dim"] = manifest.latent_dim;
  j["n_train"] = manifest.n_train;
  j["n_test"] = manifest.n_test;
  j["families"] = json::array();
  for (const auto& f : manifest.families) j["families"].push_back(family_to_json(f));
  if (!manifest.views_file.empty()) j["views_file"] = manifest.views_file;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  DatasetManifest m;
  m.schema_version = json_get<int>(j, "schema_version");
  if (m.schema_version != 1)
    throw ParseError("manifest: unknown schema_version " + std::to_string(m.schema_version));
  m.seed = json_get<std::uint64_t>(j, "seed");
  m.latent_dim = json_get<int>(j, "latent_dim");
  m.n_train = json_get<int>(j, "n_train");
  m.n_test = json_get<int>(j, "n_test");
  if (!j.contains("families") || !j.at("families").is_array())
    throw ParseError("manifest: missing field 'families'");
  for (const auto& f : j.at("families")) m.families.push_back(family_from_json(f));
  if (j.contains("views_file")) m.views_file = j.at("views_file").get<std::string>();
  return m;
}

void save_image_manifest(const std::filesystem::path& path, const ImageSetManifest& manifest) {
  json j;
  j["schema_version"] = manifest.schema_version;
  j["patch_ids_are_ground_truth"] = manifest.patch_ids_are_ground_truth;
  j["images"] = json::array();
  for (const auto& img : manifest.images) {
    json e;
    e["image_id"] = img.image_id;
    e["algo"] = img.algo;
    e["file"] = img.file;
    j["images"].push_back(e);
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

ImageSetManifest load_image_manifest(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  ImageSetManifest m;
  m.schema_version = json_get<int>(j, "schema_version");
  if (m.schema_version != 1)
    throw ParseError("image manifest: unknown schema_version " +
                     std::to_string(m.schema_version));
  m.patch_ids_are_ground_truth = json_get<bool>(j, "patch_ids_are_ground_truth");
  if (!j.contains("images") || !j.at("images").is_array())
    throw ParseError("image manifest: missing field 'images'");
  for (const auto& e : j.at("images")) {
    ImageManifestEntry entry;
    entry.image_id = json_get<std::int64_t>(e, "image_id");
    entry.algo = json_get<std::string>(e, "algo");
    entry.file = json_get<std::string>(e, "file");
    m.images.push_back(std::move(entry));
  }
  return m;
}

ImageSet load_image_set(const std::filesystem::path& manifest_path) {
  const ImageSetManifest manifest = load_image_manifest(manifest_path);
  const std::filesystem::path dir = manifest_path.parent_path();
  ImageSet set;
  set.patch_ids_are_ground_truth = manifest.patch_ids_are_ground_truth;
  for (const auto& entry : manifest.images) {
    ImageDesc img;
    img.image_id = entry.image_id;
    img.algo = entry.algo;
    img.descs = load_xdsc(dir / entry.file);
    if (img.descs.spec.name != entry.algo)
      throw ParseError("image manifest: file '" + entry.file + "' holds algorithm '" +
                       img.descs.spec.name + "', expected '" + entry.algo + "'");
    set.images.push_back(std::move(img));
  }
  return set;
}

CorrespondenceDataset load_train_dataset(const DatasetManifest& manifest,
                                         const std::filesystem::path& manifest_path) {
  const std::filesystem::path dir = manifest_path.parent_path();
  std::vector<DescriptorMatrix> mats;
  std::vector<FamilyInfo> infos;
  for (const auto& fam : manifest.families) {
    mats.push_back(load_xdsc(dir / fam.train_file));
    infos.push_back(fam.family);
  }
  return make_dataset(mats, infos);
}

}  // namespace xdesc
