#include <fstream>
#include <map>
#include <sstream>

#include "fader/binio.h"
#include "fader/error.h"
#include "fader/tagger.h"
#include "json.hpp"

namespace fader::tagger {

namespace {

constexpr char kMagic[] = "FADER01";
constexpr std::size_t kMagicSize = 7;

nlohmann::ordered_json ConfigToJson(const TaggerConfig& c) {
  return {{"word_hidden", c.word_hidden}, {"char_emb", c.char_emb},
          {"char_hidden", c.char_hidden}, {"dropout", c.dropout},
          {"lr", c.lr},                   {"lr_floor", c.lr_floor},
          {"lr_patience", c.lr_patience}, {"batch", c.batch},
          {"max_epochs", c.max_epochs},   {"clip_norm", c.clip_norm},
          {"fold_case", c.fold_case},     {"stack_b", c.stack_b == StackBMode::kRefined ? "refined" : "zeroed"},
          {"seed", c.seed}};
}

TaggerConfig ConfigFromJson(const nlohmann::json& j) {
  TaggerConfig c;
  c.word_hidden = j.at("word_hidden").get<int>();
  c.char_emb = j.at("char_emb").get<int>();
  c.char_hidden = j.at("char_hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.lr = j.at("lr").get<double>();
  c.lr_floor = j.at("lr_floor").get<double>();
  c.lr_patience = j.at("lr_patience").get<int>();
  c.batch = j.at("batch").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.fold_case = j.at("fold_case").get<bool>();
  const auto mode = j.at("stack_b").get<std::string>();
  if (mode != "refined" && mode != "zeroed") throw ConfigError("unknown stack_b mode " + mode);
  c.stack_b = mode == "refined" ? StackBMode::kRefined : StackBMode::kZeroed;
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void WriteCheckpoint(std::ostream& out, const TaggerModel& model) {
  std::vector<std::pair<std::string, std::string>> sections;
  {
    std::ostringstream s;
    binio::Writer w(s);
    w.Put<std::uint32_t>(model.tagset.types().size());
    for (CoarseType t : model.tagset.types()) w.PutString(std::string(CoarseTypeName(t)));
    sections.emplace_back("tagset", s.str());
  }
  sections.emplace_back("config", ConfigToJson(model.config).dump());
  {
    std::ostringstream s;
    binio::Writer w(s);
    w.Put<std::uint32_t>(model.chars.chars().size());
    for (char32_t c : model.chars.chars()) w.Put<std::uint32_t>(c);
    sections.emplace_back("chars", s.str());
  }
  {
    std::ostringstream s;
    binio::Writer w(s);
    std::uint32_t count = 0;
    model.params.ForEach([&](const std::string&, const Mat<double>&) { ++count; });
    w.Put<std::uint32_t>(count);
    model.params.ForEach([&](const std::string& name, const Mat<double>& m) {
      w.PutString(name);
      w.Put<std::uint32_t>(m.rows());
      w.Put<std::uint32_t>(m.cols());
      const Mat<float> f = m.cast<float>();
      w.PutFloats(f.data(), f.size());
    });
    sections.emplace_back("tensors", s.str());
  }

  binio::Writer w(out);
  w.PutRaw(std::string(kMagic, kMagicSize));
  w.Put<std::uint32_t>(sections.size());
  for (const auto& [name, payload] : sections) {
    w.PutString(name);
    w.PutString(payload);
  }
}

TaggerModel ReadCheckpoint(std::istream& in, const std::string& source) {
  binio::Reader r(in, source);
  r.Expect(std::string(kMagic, kMagicSize));
  std::map<std::string, std::string> sections;
  const auto count = r.Get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.GetString();
    sections[name] = r.GetString(std::size_t{1} << 36);
  }
  auto section = [&](const std::string& name) -> std::string& {
    auto it = sections.find(name);
    if (it == sections.end()) r.Fail("missing section '" + name + "'");
    return it->second;
  };

  TaggerModel model;
  {
    std::istringstream s(section("tagset"));
    binio::Reader sr(s, source + ":tagset");
    std::vector<CoarseType> types;
    for (std::uint32_t i = 0, n = sr.Get<std::uint32_t>(); i < n; ++i) {
      auto type = ParseCoarseType(sr.GetString());
      if (!type) sr.Fail("unknown coarse type");
      types.push_back(*type);
    }
    try {
      model.tagset = TagSet(types);
    } catch (const ArgumentError& e) {
      sr.Fail(e.what());
    }
  }
  try {
    model.config = ConfigFromJson(nlohmann::json::parse(section("config")));
    model.config.Validate();
  } catch (const nlohmann::json::exception& e) {
    r.Fail(std::string("bad config section: ") + e.what());
  } catch (const ConfigError& e) {
    r.Fail(e.what());
  }
  {
    std::istringstream s(section("chars"));
    binio::Reader sr(s, source + ":chars");
    std::vector<char32_t> chars;
    for (std::uint32_t i = 0, n = sr.Get<std::uint32_t>(); i < n; ++i) {
      chars.push_back(static_cast<char32_t>(sr.Get<std::uint32_t>()));
    }
    model.chars = CharVocab(std::move(chars));
  }
  {
    std::istringstream s(section("tensors"));
    binio::Reader sr(s, source + ":tensors");
    std::map<std::string, Mat<double>> tensors;
    for (std::uint32_t i = 0, n = sr.Get<std::uint32_t>(); i < n; ++i) {
      auto name = sr.GetString();
      const auto rows = sr.Get<std::uint32_t>(), cols = sr.Get<std::uint32_t>();
      if (static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 32)) sr.Fail("tensor too large");
      Mat<float> f(rows, cols);
      sr.GetFloats(f.data(), f.size());
      if (!f.allFinite()) sr.Fail("non-finite value in " + name);
      tensors[name] = f.cast<double>();
    }
    auto find = [&](const std::string& name) -> const Mat<double>& {
      auto it = tensors.find(name);
      if (it == tensors.end()) sr.Fail("missing tensor " + name);
      return it->second;
    };
    Dims d;
    d.chars = model.chars.size();
    d.char_emb = model.config.char_emb;
    d.char_hidden = model.config.char_hidden;
    d.word_hidden = model.config.word_hidden;
    d.word_dim = static_cast<int>(find("b_fwd.w").cols());
    d.tags = model.tagset.size();
    model.params = Parameters<double>::Zero(d);
    model.params.ForEach([&](const std::string& name, Mat<double>& m) {
      const auto& t = find(name);
      if (t.rows() != m.rows() || t.cols() != m.cols()) sr.Fail("tensor " + name + " has the wrong shape");
      m = t;
    });
  }
  return model;
}

void SaveCheckpoint(const std::string& path, const TaggerModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  WriteCheckpoint(out, model);
  if (!out) throw IoError("write failed for " + path);
}

TaggerModel LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return ReadCheckpoint(in, path);
}

}  // namespace fader::tagger
