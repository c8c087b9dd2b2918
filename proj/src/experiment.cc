// src/experiment.cc

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vsr/experiment.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vsr/error.h"
#include "vsr/frontend.h"
#include "vsr/util.h"

namespace vsr {

namespace fs = std::filesystem;

namespace {

void ReadConfigInto(const fs::path &path, ConfigMap &map, int depth) {
  if (depth > 16) throw ConfigError("config includes nested too deeply at " + path.string());
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = Trim(line);
    if (text.empty()) continue;
    if (text.rfind("include", 0) == 0 && text.find('=') == std::string::npos) {
      const std::string target = Trim(text.substr(7));
      if (target.empty())
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": include needs a file");
      fs::path inc = target;
      if (inc.is_relative()) inc = path.parent_path() / inc;
      ReadConfigInto(inc, map, depth + 1);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = Trim(text.substr(0, eq));
    if (key.empty())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    std::string value = Trim(text.substr(eq + 1));
    // Paths are remembered relative to the file that set them.
    if ((key == "corpus.manifest" || key == "corpus.lexicon") && !value.empty() &&
        fs::path(value).is_relative())
      value = (path.parent_path() / value).lexically_normal().string();
    map[key] = value;
  }
}

double ToDouble(const std::string &key, const std::string &v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception &) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
}

long ToInt(const std::string &key, const std::string &v) {
  try {
    size_t pos = 0;
    const long i = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception &) {
    throw ConfigError(key + ": '" + v + "' is not an integer");
  }
}

bool ToBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> ToList(const std::string &v, char sep = ',') {
  std::vector<std::string> out;
  for (const auto &part : Split(v, sep)) {
    const std::string t = Trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<int> ToIntList(const std::string &key, const std::string &v) {
  std::vector<int> out;
  for (const auto &s : ToList(v)) out.push_back(static_cast<int>(ToInt(key, s)));
  return out;
}

template <typename T>
std::string JoinValues(const std::vector<T> &v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string Num(double v) { return FormatDouble(v); }

void CheckRow(const std::string &row) {
  const auto parts = Split(row, '+');
  std::set<std::string> seen;
  for (const auto &p : parts)
    if ((p != "geo" && p != "eig" && p != "dnn") || !seen.insert(p).second)
      throw ConfigError("grid row '" + row + "' must join distinct geo, eig, dnn with '+'");
}

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string ReadText(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ConfigMap ReadConfigFile(const fs::path &path) {
  ConfigMap map;
  ReadConfigInto(path, map, 0);
  return map;
}

void ApplyOverride(ConfigMap &config, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || Trim(assignment.substr(0, eq)).empty())
    throw ConfigError("override '" + assignment + "' is not key=value");
  config[Trim(assignment.substr(0, eq))] = Trim(assignment.substr(eq + 1));
}

ExperimentConfig ExperimentConfig::FromMap(const ConfigMap &map, const fs::path &base_dir) {
  ExperimentConfig c;
  auto path_of = [&](const std::string &v) {
    fs::path p = v;
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  for (const auto &[key, v] : map) {
    if (key == "corpus.manifest") c.manifest = path_of(v);
    else if (key == "corpus.lexicon") c.lexicon = v.empty() ? fs::path() : path_of(v);
    else if (key == "split.min_seconds") c.min_seconds = ToDouble(key, v);
    else if (key == "roi.margin") c.roi_margin = ToDouble(key, v);
    else if (key == "pca.components") c.pca_components = static_cast<int>(ToInt(key, v));
    else if (key == "ae.channels") {
      const auto ch = ToIntList(key, v);
      if (ch.size() != 3) throw ConfigError("ae.channels needs three widths");
      std::copy(ch.begin(), ch.end(), c.autoencoder.arch.channels.begin());
    } else if (key == "ae.bottleneck") c.autoencoder.arch.bottleneck = static_cast<int>(ToInt(key, v));
    else if (key == "ae.epochs") c.autoencoder.epochs = static_cast<int>(ToInt(key, v));
    else if (key == "ae.batch_size") c.autoencoder.batch_size = static_cast<int>(ToInt(key, v));
    else if (key == "ae.learning_rate") c.autoencoder.learning_rate = ToDouble(key, v);
    else if (key == "ae.momentum") c.autoencoder.momentum = ToDouble(key, v);
    else if (key == "ae.seed") c.autoencoder.seed = static_cast<uint64_t>(ToInt(key, v));
    else if (key == "ae.max_frames") c.ae_max_frames = static_cast<int>(ToInt(key, v));
    else if (key == "grid.rows") c.rows = ToList(v, ';');
    else if (key == "grid.deltas") c.deltas = ToIntList(key, v);
    else if (key == "grid.normalizations") {
      c.normalizations.clear();
      for (const auto &n : ToList(v)) c.normalizations.push_back(ParseNormalization(n));
    } else if (key == "hmm.topology") c.topology = ParseTopology(v);
    else if (key == "hmm.schedule") c.mixture_schedule = ToIntList(key, v);
    else if (key == "hmm.silence") c.use_silence = ToBool(key, v);
    else if (key == "hmm.floor_factor") c.variance_floor_factor = ToDouble(key, v);
    else if (key == "decode.lm_scale") c.decode.lm_scale = ToDouble(key, v);
    else if (key == "decode.penalty") c.decode.word_insertion_penalty = ToDouble(key, v);
    else if (key == "decode.beam") c.decode.beam = ToDouble(key, v);
    else if (key == "eval.seed") c.eval_seed = static_cast<uint64_t>(ToInt(key, v));
    else if (key == "eval.bootstrap") c.bootstrap_samples = static_cast<int>(ToInt(key, v));
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (!(c.min_seconds > 0.0)) throw ConfigError("split.min_seconds must be positive");
  if (!(c.roi_margin >= 0.0)) throw ConfigError("roi.margin must be non-negative");
  if (c.pca_components < 1 || c.pca_components > MouthFrame::kSize)
    throw ConfigError("pca.components must be in [1, 512]");
  if (c.autoencoder.arch.bottleneck < 1) throw ConfigError("ae.bottleneck must be positive");
  if (c.autoencoder.epochs < 1 || c.autoencoder.batch_size < 1 ||
      !(c.autoencoder.learning_rate > 0.0))
    throw ConfigError("autoencoder hyperparameters must be positive");
  if (c.ae_max_frames < 0) throw ConfigError("ae.max_frames must be >= 0");
  if (c.rows.empty()) throw ConfigError("grid.rows is empty");
  for (const auto &r : c.rows) CheckRow(r);
  if (c.deltas.empty()) throw ConfigError("grid.deltas is empty");
  for (int d : c.deltas)
    if (d < 0 || d > 3) throw ConfigError("grid.deltas entries must be 0..3");
  if (c.normalizations.empty()) throw ConfigError("grid.normalizations is empty");
  if (c.mixture_schedule.empty()) throw ConfigError("hmm.schedule is empty");
  for (size_t i = 0; i < c.mixture_schedule.size(); ++i)
    if (c.mixture_schedule[i] < 1 || (i && c.mixture_schedule[i] < c.mixture_schedule[i - 1]))
      throw ConfigError("hmm.schedule must be positive and non-decreasing");
  if (!(c.variance_floor_factor > 0.0)) throw ConfigError("hmm.floor_factor must be positive");
  c.decode.Validate();
  if (c.bootstrap_samples < 100) throw ConfigError("eval.bootstrap must be at least 100");
  return c;
}

std::string ExperimentConfig::Canonical() const {
  std::vector<std::string> norms;
  for (auto n : normalizations) norms.push_back(NormalizationName(n));
  std::vector<int> ch(autoencoder.arch.channels.begin(), autoencoder.arch.channels.end());
  std::ostringstream os;
  os << "ae.batch_size=" << autoencoder.batch_size << '\n'
     << "ae.bottleneck=" << autoencoder.arch.bottleneck << '\n'
     << "ae.channels=" << JoinValues(ch) << '\n'
     << "ae.epochs=" << autoencoder.epochs << '\n'
     << "ae.learning_rate=" << Num(autoencoder.learning_rate) << '\n'
     << "ae.max_frames=" << ae_max_frames << '\n'
     << "ae.momentum=" << Num(autoencoder.momentum) << '\n'
     << "ae.seed=" << autoencoder.seed << '\n'
     << "decode.beam=" << Num(decode.beam) << '\n'
     << "decode.lm_scale=" << Num(decode.lm_scale) << '\n'
     << "decode.penalty=" << Num(decode.word_insertion_penalty) << '\n'
     << "eval.bootstrap=" << bootstrap_samples << '\n'
     << "eval.seed=" << eval_seed << '\n'
     << "grid.deltas=" << JoinValues(deltas) << '\n'
     << "grid.normalizations=" << Join(norms, ",") << '\n'
     << "grid.rows=" << Join(rows, ";") << '\n'
     << "hmm.floor_factor=" << Num(variance_floor_factor) << '\n'
     << "hmm.schedule=" << JoinValues(mixture_schedule) << '\n'
     << "hmm.silence=" << (use_silence ? "true" : "false") << '\n'
     << "hmm.topology=" << TopologyName(topology) << '\n'
     << "pca.components=" << pca_components << '\n'
     << "roi.margin=" << Num(roi_margin) << '\n'
     << "split.min_seconds=" << Num(min_seconds) << '\n';
  return os.str();
}

std::string ConfigHelp() {
  const ExperimentConfig d;
  return "corpus.manifest      manifest.tsv of the corpus (required)\n"
         "corpus.lexicon       lexicon file (default: lexicon.txt beside the manifest)\n" +
         std::string("include <file>       read another config file in place\n") +
         d.Canonical();
}

std::string DeltaName(int context) {
  return context == 0 ? "raw" : "dd" + std::to_string(context);
}

std::string GridCell::Name() const {
  std::string r = row;
  std::replace(r.begin(), r.end(), '+', '-');
  return r + "." + DeltaName(delta) + "." + NormalizationName(normalization) + "." +
         TopologyName(topology);
}

// ---------------------------------------------------------------------------

fs::path StageCache::Dir(const std::string &stage, const std::string &key_material) const {
  return root_ / (stage + "-" + Sha256Hex(key_material).substr(0, 16));
}

fs::path StageCache::Ensure(const std::string &stage, const std::string &key_material,
                            const std::function<void(const fs::path &)> &build, bool *built) {
  const fs::path dir = Dir(stage, key_material);
  if (built) *built = false;
  if (fs::exists(dir / "DONE")) return dir;
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::remove_all(dir);
  fs::create_directories(tmp);
  build(tmp);
  nlohmann::ordered_json stamp;
  stamp["stage"] = stage;
  stamp["tool_version"] = kToolVersion;
  stamp["config_hash"] = Sha256Hex(key_material);
  WriteText(tmp / "STAMP.json", stamp.dump(2) + "\n");
  WriteText(tmp / "DONE", "");
  fs::rename(tmp, dir);
  if (built) *built = true;
  return dir;
}

// ---------------------------------------------------------------------------

Experiment::Experiment(ExperimentConfig config, fs::path out_dir, unsigned jobs)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), jobs_(jobs), cache_(out_dir_) {}

std::string Experiment::CorpusHash() const {
  std::string material = Sha256File(config_.manifest);
  for (const auto &r : records_)
    material += r.utterance_id + Sha256File(r.landmark_path) + Sha256File(r.frames_path);
  fs::path lex = config_.lexicon.empty() ? config_.manifest.parent_path() / "lexicon.txt"
                                         : config_.lexicon;
  material += Sha256File(lex);
  return Sha256Hex(material);
}

std::string Experiment::ConfigHash() const {
  return Sha256Hex(config_.Canonical() + corpus_hash_);
}

void Experiment::Prepare() {
  if (prepared_) return;
  if (config_.manifest.empty()) throw ConfigError("corpus.manifest is not set");
  fs::create_directories(out_dir_);
  records_ = LoadManifest(config_.manifest);
  const fs::path lex = config_.lexicon.empty()
                           ? config_.manifest.parent_path() / "lexicon.txt"
                           : config_.lexicon;
  lexicon_ = LoadLexicon(lex);
  for (const auto &r : records_)
    for (const auto &w : r.transcript)
      if (!lexicon_.Contains(w))
        throw OovError("utterance " + r.utterance_id + ": word '" + w + "' is not in " +
                       lex.string());
  split_ = SplitBySpeakerDuration(records_, config_.min_seconds);
  if (split_.test.empty())
    throw DegenerateSplitError("every speaker has at least " + Num(config_.min_seconds) +
                               " s; the test partition is empty");
  std::vector<std::vector<std::string>> test_text;
  for (const auto &r : split_.test) test_text.push_back(r.transcript);
  lm_ = EstimateClosedLm(test_text);
  corpus_hash_ = CorpusHash();

  fs::create_directories(out_dir_ / "lm");
  lm_.Save(out_dir_ / "lm" / "closed.alm");
  lm_.WriteArpa(out_dir_ / "lm" / "closed.arpa");
  WriteText(out_dir_ / "config.txt", "# " + std::string(kToolVersion) + " config " +
                                          ConfigHash() + "\n" + config_.Canonical());
  {
    std::ostringstream os;
    for (const auto &r : split_.train) os << r.utterance_id << "\ttrain\t" << r.speaker_id << '\n';
    for (const auto &r : split_.test) os << r.utterance_id << "\ttest\t" << r.speaker_id << '\n';
    WriteText(out_dir_ / "split.tsv", os.str());
  }
  LogInfo("corpus: " + std::to_string(split_.train.size()) + " train / " +
          std::to_string(split_.test.size()) + " test utterances");
  BuildStreams();
  prepared_ = true;
}

namespace {

std::vector<const UtteranceRecord *> SplitOrder(const CorpusSplit &split) {
  std::vector<const UtteranceRecord *> all;
  for (const auto &r : split.train) all.push_back(&r);
  for (const auto &r : split.test) all.push_back(&r);
  return all;
}

std::string SplitMaterial(const CorpusSplit &split) {
  std::string m;
  for (const auto &r : split.train) m += r.utterance_id + ",";
  return m;
}

template <typename Fn>
void ForUtterances(const std::vector<const UtteranceRecord *> &utts, unsigned jobs,
                   const char *stage, Fn fn) {
  ParallelFor(
      utts.size(),
      [&](size_t i) {
        try {
          fn(*utts[i]);
        } catch (const std::exception &e) {
          throw Error(std::string(stage) + ": utterance " + utts[i]->utterance_id + ": " +
                      e.what());
        }
      },
      jobs);
}

std::vector<MouthFrame> LoadRoi(const fs::path &dir, const UtteranceRecord &r) {
  return ReadMouthFrames(dir / (r.utterance_id + ".frm"));
}

}  // namespace

void Experiment::BuildStreams() {
  const auto utts = SplitOrder(split_);
  const std::string split_key = SplitMaterial(split_);
  roi_key_ = "roi\n" + corpus_hash_ + "\nmargin=" + Num(config_.roi_margin);
  const double margin = config_.roi_margin;
  const fs::path roi_dir = cache_.Ensure("roi", roi_key_, [&](const fs::path &tmp) {
    LogInfo("extracting mouth regions");
    ForUtterances(utts, jobs_, "extract-roi", [&](const UtteranceRecord &r) {
      const auto lmk = ReadLandmarkFile(r.landmark_path);
      const FrameStack stack = ReadFramesFile(r.frames_path);
      if (lmk.size() != stack.size())
        throw IntegrityError(std::to_string(lmk.size()) + " landmark frames but " +
                             std::to_string(stack.size()) + " image frames");
      std::vector<MouthFrame> frames;
      for (size_t t = 0; t < lmk.size(); ++t) {
        MouthFrame f = ExtractAlignedRoi(lmk[t], stack.Frame(t), margin);
        f.utterance_id = r.utterance_id;
        f.frame_index = static_cast<int>(t);
        frames.push_back(std::move(f));
      }
      WriteMouthFrames(tmp / (r.utterance_id + ".frm"), frames);
    });
  });

  std::set<std::string> needed;
  for (const auto &row : config_.rows)
    for (const auto &s : Split(row, '+')) needed.insert(s);

  for (const auto &stream : needed) {
    std::string key;
    std::function<void(const fs::path &)> build;
    if (stream == "geo") {
      key = "geo\n" + corpus_hash_;
      build = [&](const fs::path &tmp) {
        LogInfo("computing geometric features");
        ForUtterances(utts, jobs_, "feat-geo", [&](const UtteranceRecord &r) {
          WriteFeatureArchive(tmp / (r.utterance_id + ".vfa"),
                              GeometricStream(ReadLandmarkFile(r.landmark_path), r.utterance_id,
                                              r.speaker_id));
        });
      };
    } else if (stream == "eig") {
      key = "eig\n" + roi_key_ + "\nsplit=" + split_key +
            "\nK=" + std::to_string(config_.pca_components);
      build = [&](const fs::path &tmp) {
        LogInfo("fitting eigenlips");
        std::vector<MouthFrame> train;
        for (const auto &r : split_.train) {
          auto f = LoadRoi(roi_dir, r);
          train.insert(train.end(), f.begin(), f.end());
        }
        const EigenlipModel model = FitPca(train, config_.pca_components);
        SaveEigenlipModel(tmp / "model.eig", model);
        ForUtterances(utts, jobs_, "feat-eig", [&](const UtteranceRecord &r) {
          WriteFeatureArchive(tmp / (r.utterance_id + ".vfa"),
                              EigenlipStream(model, LoadRoi(roi_dir, r), r.utterance_id,
                                             r.speaker_id));
        });
      };
    } else {
      const auto &ae = config_.autoencoder;
      std::vector<int> ch(ae.arch.channels.begin(), ae.arch.channels.end());
      key = "dnn\n" + roi_key_ + "\nsplit=" + split_key + "\nchannels=" + JoinValues(ch) +
            "\nD=" + std::to_string(ae.arch.bottleneck) + "\nepochs=" +
            std::to_string(ae.epochs) + "\nbatch=" + std::to_string(ae.batch_size) +
            "\nlr=" + Num(ae.learning_rate) + "\nmomentum=" + Num(ae.momentum) +
            "\nseed=" + std::to_string(ae.seed) +
            "\nmax_frames=" + std::to_string(config_.ae_max_frames);
      build = [&](const fs::path &tmp) {
        std::vector<MouthFrame> train;
        for (const auto &r : split_.train) {
          auto f = LoadRoi(roi_dir, r);
          train.insert(train.end(), f.begin(), f.end());
        }
        const size_t cap = static_cast<size_t>(config_.ae_max_frames);
        if (cap > 0 && train.size() > cap) {
          std::vector<size_t> idx(train.size());
          std::iota(idx.begin(), idx.end(), 0);
          std::mt19937_64 rng(config_.autoencoder.seed);
          std::shuffle(idx.begin(), idx.end(), rng);
          idx.resize(cap);
          std::sort(idx.begin(), idx.end());
          std::vector<MouthFrame> subset;
          for (size_t i : idx) subset.push_back(train[i]);
          train = std::move(subset);
        }
        LogInfo("training the autoencoder on " + std::to_string(train.size()) + " frames");
        auto [model, report] = TrainAutoencoder(train, config_.autoencoder);
        model.Save(tmp / "model.cae");
        nlohmann::ordered_json j;
        j["epochs"] = report.epochs;
        j["epoch_losses"] = report.epoch_losses;
        WriteText(tmp / "train.json", j.dump(2) + "\n");
        const ConvAutoencoder saved = ConvAutoencoder::Load(tmp / "model.cae");
        ForUtterances(utts, jobs_, "feat-dnn", [&](const UtteranceRecord &r) {
          WriteFeatureArchive(tmp / (r.utterance_id + ".vfa"),
                              DeepStream(saved, LoadRoi(roi_dir, r), r.utterance_id,
                                         r.speaker_id));
        });
      };
    }
    const fs::path dir = cache_.Ensure("stream-" + stream, key, build);
    stream_keys_[stream] = key;
    auto &seqs = streams_[stream];
    seqs.clear();
    for (const auto *r : utts) seqs.push_back(ReadFeatureArchive(dir / (r->utterance_id + ".vfa")));
  }
}

std::vector<FeatureSequence> Experiment::CellFeatures(const GridCell &cell) const {
  std::vector<std::vector<FeatureSequence>> parts;
  for (const auto &s : Split(cell.row, '+')) {
    auto it = streams_.find(s);
    if (it == streams_.end()) throw ConfigError("stream '" + s + "' was not built");
    std::vector<FeatureSequence> seqs = ZscoreNormalize(it->second, cell.normalization);
    if (cell.delta > 0)
      for (auto &q : seqs) q = AddDeltas(q, cell.delta);
    parts.push_back(std::move(seqs));
  }
  std::vector<FeatureSequence> out;
  for (size_t u = 0; u < parts.front().size(); ++u) {
    std::vector<FeatureSequence> per;
    for (const auto &p : parts) per.push_back(p[u]);
    out.push_back(CombineStreams(per));
  }
  return out;
}

CellResult Experiment::RunCell(const GridCell &cell) {
  Prepare();
  CheckRow(cell.row);
  CellResult result;
  result.cell = cell;
  const size_t n_train = split_.train.size();

  std::string hmm_key = "hmm\n" + corpus_hash_ + "\nsplit=" + SplitMaterial(split_) +
                        "\nrow=" + cell.row;
  for (const auto &s : Split(cell.row, '+')) hmm_key += "\n" + stream_keys_.at(s);
  hmm_key += "\nnorm=" + NormalizationName(cell.normalization) +
             "\ndelta=" + std::to_string(cell.delta) + "\ntopology=" +
             TopologyName(cell.topology) + "\nschedule=" + JoinValues(config_.mixture_schedule) +
             "\nsilence=" + (config_.use_silence ? "1" : "0") +
             "\nfloor=" + Num(config_.variance_floor_factor);

  std::vector<FeatureSequence> feats;
  auto features = [&]() -> std::vector<FeatureSequence> & {
    if (feats.empty()) feats = CellFeatures(cell);
    return feats;
  };
  const fs::path hmm_dir = cache_.Ensure(
      "hmm", hmm_key,
      [&](const fs::path &tmp) {
        LogInfo("training " + cell.Name());
        std::vector<FeatureSequence> train(features().begin(), features().begin() + n_train);
        std::vector<std::vector<std::string>> text;
        for (const auto &r : split_.train) text.push_back(r.transcript);
        FlatStartOptions fso;
        fso.topology = cell.topology;
        fso.use_silence = config_.use_silence;
        fso.variance_floor_factor = config_.variance_floor_factor;
        OpticalModel model = FlatStart(train, text, lexicon_, fso);
        TrainOptions to;
        to.mixture_schedule = config_.mixture_schedule;
        to.jobs = 1;
        const TrainResult tr = TrainEm(model, train, text, lexicon_, to);
        model.Save(tmp / "model.opt");
        nlohmann::ordered_json j;
        j["log_likelihoods"] = tr.log_likelihoods;
        j["mixtures"] = tr.mixtures;
        j["utterances_used"] = tr.utterances_used;
        j["utterances_skipped"] = tr.utterances_skipped;
        WriteText(tmp / "train.json", j.dump(2) + "\n");
      },
      &result.trained);
  {
    const auto j = nlohmann::json::parse(ReadText(hmm_dir / "train.json"));
    result.train_log_likelihoods = j["log_likelihoods"].get<std::vector<double>>();
  }

  const std::string decode_key = "decode\n" + hmm_key + "\nlm_scale=" +
                                 Num(config_.decode.lm_scale) + "\npenalty=" +
                                 Num(config_.decode.word_insertion_penalty) +
                                 "\nbeam=" + Num(config_.decode.beam);
  const fs::path dec_dir = cache_.Ensure(
      "decode", decode_key,
      [&](const fs::path &tmp) {
        const OpticalModel model = OpticalModel::Load(hmm_dir / "model.opt");
        const Decoder decoder(model, lexicon_, lm_, config_.decode);
        DecodeConfig exact_config = config_.decode;
        exact_config.beam = std::numeric_limits<double>::infinity();
        const Decoder exact(model, lexicon_, lm_, exact_config);
        std::vector<std::pair<std::string, std::vector<std::string>>> hyps(split_.test.size());
        std::vector<std::string> timing(split_.test.size());
        for (size_t i = 0; i < split_.test.size(); ++i) {
          const FeatureSequence &f = features()[n_train + i];
          hyps[i].first = f.utterance_id;
          timing[i] = f.utterance_id;
          DecodeResult d;
          try {
            try {
              d = decoder.Decode(f.frames);
            } catch (const EmptyBeamError &e) {
              // over-pruned: the search space is small enough to redo exactly
              LogWarning(cell.Name() + ": " + f.utterance_id + ": " + e.what() +
                         "; decoding again without pruning");
              d = exact.Decode(f.frames);
            }
          } catch (const AlignmentInfeasibleError &e) {
            LogWarning(cell.Name() + ": " + f.utterance_id + ": " + e.what());
            continue;
          }
          hyps[i].second = d.words;
          std::ostringstream os;
          os << f.utterance_id;
          for (size_t w = 0; w < d.words.size(); ++w)
            os << '\t' << d.words[w] << ' ' << d.boundaries[w].first << ' '
               << d.boundaries[w].second;
          timing[i] = os.str();
        }
        WriteHypotheses(tmp / "hyp.txt", hyps);
        WriteText(tmp / "timing.txt", Join(timing, "\n") + "\n");
      },
      &result.decoded);

  std::map<std::string, std::vector<std::string>> refs, hyps;
  for (const auto &r : split_.test) refs[r.utterance_id] = r.transcript;
  for (auto &[id, words] : ReadTranscriptFile(dec_dir / "hyp.txt")) hyps[id] = words;
  result.report = BootstrapCi(ScoreUtterances(refs, hyps), config_.bootstrap_samples,
                              config_.eval_seed, jobs_);
  fs::create_directories(out_dir_ / "grid");
  WriteWerReport(out_dir_ / "grid" / (cell.Name() + ".json"), result.report);
  LogInfo(cell.Name() + ": " + result.report.FormatLine());
  return result;
}

std::vector<CellResult> Experiment::RunGrid() {
  Prepare();
  std::vector<GridCell> cells;
  for (const auto &row : config_.rows)
    for (auto norm : config_.normalizations)
      for (int d : config_.deltas) cells.push_back({row, d, norm, config_.topology});
  std::vector<CellResult> results(cells.size());
  const unsigned inner = jobs_;
  jobs_ = 1;
  try {
    ParallelFor(cells.size(), [&](size_t i) { results[i] = RunCell(cells[i]); }, inner);
  } catch (...) {
    jobs_ = inner;
    throw;
  }
  jobs_ = inner;
  WriteTables(results);
  return results;
}

std::string FormatTsv(const std::vector<CellResult> &results) {
  std::ostringstream os;
  os << "row\tdelta\tnormalization\ttopology\twer\tci_low\tci_high\tsubstitutions\tinsertions"
        "\tdeletions\treference_words\tsummary\n";
  char buf[64];
  for (const auto &r : results) {
    const WerReport &w = r.report;
    os << r.cell.row << '\t' << DeltaName(r.cell.delta) << '\t'
       << NormalizationName(r.cell.normalization) << '\t' << TopologyName(r.cell.topology);
    std::snprintf(buf, sizeof(buf), "\t%.4f\t%.4f\t%.4f", w.wer, w.ci_low, w.ci_high);
    os << buf << '\t' << w.substitutions << '\t' << w.insertions << '\t' << w.deletions << '\t'
       << w.ref_words << '\t' << w.FormatLine() << '\n';
  }
  return os.str();
}

std::string FormatMarkdownTable(const std::vector<CellResult> &results) {
  std::vector<std::string> rows;
  std::vector<Normalization> norms;
  std::vector<int> deltas;
  std::map<std::string, std::string> cell;
  for (const auto &r : results) {
    if (std::find(rows.begin(), rows.end(), r.cell.row) == rows.end()) rows.push_back(r.cell.row);
    if (std::find(norms.begin(), norms.end(), r.cell.normalization) == norms.end())
      norms.push_back(r.cell.normalization);
    if (std::find(deltas.begin(), deltas.end(), r.cell.delta) == deltas.end())
      deltas.push_back(r.cell.delta);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.1f±%.1f", r.report.wer,
                  (r.report.ci_high - r.report.ci_low) / 2.0);
    cell[r.cell.row + "|" + NormalizationName(r.cell.normalization) + "|" +
         std::to_string(r.cell.delta)] = buf;
  }
  std::ostringstream os;
  os << "| features |";
  for (auto n : norms)
    for (int d : deltas) os << ' ' << NormalizationName(n) << ' ' << DeltaName(d) << " |";
  os << "\n|---|";
  for (size_t i = 0; i < norms.size() * deltas.size(); ++i) os << "---|";
  os << '\n';
  for (const auto &row : rows) {
    os << "| " << row << " |";
    for (auto n : norms)
      for (int d : deltas) {
        auto it = cell.find(row + "|" + NormalizationName(n) + "|" + std::to_string(d));
        os << ' ' << (it == cell.end() ? "-" : it->second) << " |";
      }
    os << '\n';
  }
  return os.str();
}

void Experiment::WriteTables(const std::vector<CellResult> &results) const {
  const std::string stamp = "# " + std::string(kToolVersion) + " config " + ConfigHash() + "\n";
  WriteText(out_dir_ / "results.tsv", stamp + FormatTsv(results));
  WriteText(out_dir_ / "results.md", "<!-- " + stamp.substr(2, stamp.size() - 3) + " -->\n\n" +
                                         FormatMarkdownTable(results));
}

}  // namespace vsr
