#include "rfx/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rfx::io {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  explicit Reader(const std::string& b) : buf(b) {}
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("truncated file");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                      (static_cast<std::uint8_t>(buf[pos + 1]) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed for " + path);
}

std::string manifest_path(const std::string& dataset_path) {
  return dataset_path + ".json";
}

void write_dataset(const sim::PairedDataset& ds, const std::string& path,
                   const json& manifest) {
  std::string out;
  out.reserve(18 + ds.pairs.size() * ds.line_len * 8);
  out += "RFPX";
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(ds.pairs.size()));
  put_u32(out, static_cast<std::uint32_t>(ds.line_len));
  put_f32(out, static_cast<float>(ds.probe.fs));
  put_f32(out, static_cast<float>(ds.probe.fc));
  for (const auto& pair : ds.pairs) {
    if (pair.low.samples.size() != ds.line_len ||
        pair.high.samples.size() != ds.line_len)
      throw std::invalid_argument("write_dataset: line length mismatch");
    for (double s : pair.low.samples) put_f32(out, static_cast<float>(s));
    for (double s : pair.high.samples) put_f32(out, static_cast<float>(s));
  }
  atomic_write(path, out);
  atomic_write(manifest_path(path), manifest.dump(2) + "\n");
}

sim::PairedDataset read_dataset(const std::string& path) {
  const std::string buf = slurp(path);
  Reader r(buf);
  r.need(4);
  if (buf.compare(0, 4, "RFPX") != 0)
    throw std::runtime_error(path + ": not an RFPX file");
  r.pos = 4;
  const std::uint16_t version = r.u16();
  if (version != 1)
    throw std::runtime_error(path + ": unsupported RFPX version");
  const std::uint32_t n_pairs = r.u32();
  const std::uint32_t len = r.u32();
  sim::PairedDataset ds;
  ds.line_len = len;
  ds.probe.fs = r.f32();
  ds.probe.fc = r.f32();
  ds.pairs.resize(n_pairs);
  for (auto& pair : ds.pairs) {
    pair.low.samples.resize(len);
    pair.low.fs = ds.probe.fs;
    pair.low.band = sim::BandTag::low;
    for (auto& s : pair.low.samples) s = r.f32();
    pair.high.samples.resize(len);
    pair.high.fs = ds.probe.fs;
    pair.high.band = sim::BandTag::high;
    for (auto& s : pair.high.samples) s = r.f32();
  }
  // Split tags live in the manifest; default everything to train.
  ds.split.assign(n_pairs, sim::Split::train);
  std::ifstream mf(manifest_path(path));
  if (mf) {
    json manifest = json::parse(mf);
    if (manifest.contains("splits")) {
      const auto& sp = manifest["splits"];
      for (std::size_t i = 0; i < ds.split.size() && i < sp.size(); ++i) {
        const std::string tag = sp[i].get<std::string>();
        ds.split[i] = tag == "val"    ? sim::Split::val
                      : tag == "test" ? sim::Split::test
                                      : sim::Split::train;
      }
    }
  }
  return ds;
}

json read_manifest(const std::string& path) {
  std::ifstream mf(manifest_path(path));
  if (!mf) throw std::runtime_error("missing manifest for " + path);
  return json::parse(mf);
}

namespace {

json config_to_json(const model::ModelConfig& c) {
  return json{{"patch", c.patch},           {"dim", c.dim},
              {"enc_layers", c.enc_layers}, {"dec_layers", c.dec_layers},
              {"heads", c.heads},           {"mlp_ratio", c.mlp_ratio},
              {"t", c.t},                   {"f", c.f}};
}

model::ModelConfig config_from_json(const json& j) {
  model::ModelConfig c;
  c.patch = j.at("patch");
  c.dim = j.at("dim");
  c.enc_layers = j.at("enc_layers");
  c.dec_layers = j.at("dec_layers");
  c.heads = j.at("heads");
  c.mlp_ratio = j.at("mlp_ratio");
  c.t = j.at("t");
  c.f = j.at("f");
  return c;
}

// Snap a double array to f32 precision in place and append the f32 bytes.
void snap_and_put(std::vector<double>& values, std::string& out) {
  for (auto& v : values) {
    const float f = static_cast<float>(v);
    v = static_cast<double>(f);
    char buf[4];
    std::memcpy(buf, &f, 4);
    out.append(buf, 4);
  }
}

}  // namespace

void save_checkpoint(model::ModelParams& params, const std::string& path,
                     const json& extra) {
  std::string payload;
  json table = json::array();
  std::size_t offset = 0;
  for (ad::Param* p : params.trainable()) {
    table.push_back({{"name", p->name},
                     {"rows", p->rows},
                     {"cols", p->cols},
                     {"offset", offset}});
    snap_and_put(p->value, payload);
    offset += p->value.size() * 4;
  }
  // Running stats are serialized in the header; snap them too so that
  // save -> load is value-identical.
  for (auto* v : {&params.bn_run_mean, &params.bn_run_var})
    for (auto& x : *v) x = static_cast<double>(static_cast<float>(x));

  json header{{"config", config_to_json(params.cfg)},
              {"params", table},
              {"running_mean", params.bn_run_mean},
              {"running_var", params.bn_run_var}};
  if (!extra.empty()) header["extra"] = extra;
  const std::string hs = header.dump();

  std::string out;
  out.reserve(10 + hs.size() + payload.size());
  out += "RFCK";
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(hs.size()));
  out += hs;
  out += payload;
  atomic_write(path, out);
}

model::ModelParams load_checkpoint(const std::string& path, json* extra) {
  const std::string buf = slurp(path);
  Reader r(buf);
  r.need(4);
  if (buf.compare(0, 4, "RFCK") != 0)
    throw std::runtime_error(path + ": not an RFCK file");
  r.pos = 4;
  if (r.u16() != 1)
    throw std::runtime_error(path + ": unsupported RFCK version");
  const std::uint32_t hlen = r.u32();
  r.need(hlen);
  const json header = json::parse(buf.substr(r.pos, hlen));
  const std::size_t base = r.pos + hlen;

  model::ModelParams params(config_from_json(header.at("config")));
  params.bn_run_mean = header.at("running_mean").get<std::vector<double>>();
  params.bn_run_var = header.at("running_var").get<std::vector<double>>();

  auto ps = params.trainable();
  const auto& table = header.at("params");
  if (table.size() != ps.size())
    throw std::runtime_error(path + ": parameter table size mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& entry = table[i];
    if (entry.at("name") != ps[i]->name ||
        entry.at("rows") != ps[i]->rows || entry.at("cols") != ps[i]->cols)
      throw std::runtime_error(path + ": parameter table mismatch at " +
                               ps[i]->name);
    Reader pr(buf);
    pr.pos = base + entry.at("offset").get<std::size_t>();
    for (auto& v : ps[i]->value) v = pr.f32();
  }
  if (extra)
    *extra = header.contains("extra") ? header["extra"] : json::object();
  return params;
}

}  // namespace rfx::io
