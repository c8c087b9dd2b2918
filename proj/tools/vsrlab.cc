// tools/vsrlab.cc

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

// vsrlab: command-line front end of the visual speech recognition toolkit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vsr/autoencoder.h"
#include "vsr/corpus.h"
#include "vsr/decoder.h"
#include "vsr/eigenlips.h"
#include "vsr/error.h"
#include "vsr/eval.h"
#include "vsr/experiment.h"
#include "vsr/features.h"
#include "vsr/frontend.h"
#include "vsr/lingware.h"
#include "vsr/optical_model.h"
#include "vsr/util.h"

namespace fs = std::filesystem;
using namespace vsr;

namespace {

struct CorpusArgs {
  std::string manifest;
  std::string lexicon;
  double min_seconds = 60.0;
  std::string subset = "all";

  void Add(CLI::App *cmd, bool subset_option) {
    cmd->add_option("--manifest", manifest, "Corpus manifest (tsv)")->required();
    cmd->add_option("--lexicon", lexicon, "Lexicon file (default: lexicon.txt beside the manifest)");
    cmd->add_option("--min-seconds", min_seconds,
                    "Speakers with less recorded time than this form the test partition")
        ->capture_default_str();
    if (subset_option)
      cmd->add_option("--subset", subset, "Utterances to process")
          ->check(CLI::IsMember({"all", "train", "test"}))
          ->capture_default_str();
  }

  std::vector<UtteranceRecord> Records() const {
    auto records = LoadManifest(manifest);
    if (subset == "all") return records;
    CorpusSplit split = SplitBySpeakerDuration(records, min_seconds);
    return subset == "train" ? split.train : split.test;
  }

  CorpusSplit LoadSplit() const {
    return SplitBySpeakerDuration(LoadManifest(manifest), min_seconds);
  }

  Lexicon LoadLex() const {
    return LoadLexicon(lexicon.empty() ? fs::path(manifest).parent_path() / "lexicon.txt"
                                       : fs::path(lexicon));
  }
};

void EnsureDir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<MouthFrame> LoadRoiFor(const fs::path &dir, const UtteranceRecord &r) {
  return ReadMouthFrames(dir / (r.utterance_id + ".frm"));
}

std::vector<MouthFrame> LoadRoiSet(const fs::path &dir, const std::vector<UtteranceRecord> &recs) {
  std::vector<MouthFrame> all;
  for (const auto &r : recs) {
    auto f = LoadRoiFor(dir, r);
    all.insert(all.end(), f.begin(), f.end());
  }
  return all;
}

std::vector<FeatureSequence> LoadFeatureSet(const fs::path &dir,
                                            const std::vector<UtteranceRecord> &recs) {
  std::vector<FeatureSequence> out;
  for (const auto &r : recs) out.push_back(ReadFeatureArchive(dir / (r.utterance_id + ".vfa")));
  return out;
}

BigramLm LoadLm(const fs::path &path) {
  return path.extension() == ".arpa" ? BigramLm::ReadArpa(path) : BigramLm::Load(path);
}

std::vector<int> ParseIntList(const std::string &s) {
  std::vector<int> out;
  for (const auto &p : Split(s, ',')) {
    const std::string t = Trim(p);
    if (t.empty()) continue;
    try {
      out.push_back(std::stoi(t));
    } catch (const std::exception &) {
      throw ConfigError("'" + t + "' is not an integer");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"vsrlab: visual speech recognition experiments (GMM-HMM over lip features)"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings and results");
  unsigned jobs = 1;
  app.add_option("-j,--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();

  // synth-corpus
  auto *synth = app.add_subcommand("synth-corpus", "Render a synthetic talking-mouth corpus");
  SynthSpec spec = DefaultSynthSpec();
  std::string synth_out, counts;
  synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  synth->add_option("--speakers", spec.n_speakers, "Number of speakers")->capture_default_str();
  synth->add_option("--utterances", spec.n_utterances, "Total utterances")->capture_default_str();
  synth->add_option("--speaker-counts", counts, "Comma-separated utterances per speaker");
  synth->add_option("--noise", spec.noise_level, "Noise level")->capture_default_str();
  synth->add_option("--frames-per-phoneme", spec.frames_per_phoneme_mean,
                    "Mean frames per phoneme")->capture_default_str();
  synth->add_option("--frames-per-phoneme-sd", spec.frames_per_phoneme_stddev,
                    "Standard deviation of frames per phoneme")->capture_default_str();
  synth->add_option("--frame-rate", spec.frame_rate, "Frames per second")->capture_default_str();
  synth->add_option("out", synth_out, "Output directory")->required();

  // extract-roi
  auto *roi = app.add_subcommand("extract-roi", "Aligned 32x16 mouth regions per utterance");
  CorpusArgs roi_corpus;
  roi_corpus.Add(roi, true);
  double margin = kDefaultRoiMargin;
  std::string roi_out;
  roi->add_option("--margin", margin, "Bounding box margin")->capture_default_str();
  roi->add_option("--out", roi_out, "Output directory")->required();

  // feat-geo
  auto *geo = app.add_subcommand("feat-geo", "Geometric lip features from landmarks");
  CorpusArgs geo_corpus;
  geo_corpus.Add(geo, true);
  std::string geo_out;
  geo->add_option("--out", geo_out, "Output directory")->required();

  // train-pca
  auto *tpca = app.add_subcommand("train-pca", "Fit eigenlips on the training partition");
  CorpusArgs pca_corpus;
  pca_corpus.Add(tpca, false);
  std::string pca_roi, pca_out;
  int pca_k = kDefaultEigenlipCount;
  tpca->add_option("--roi", pca_roi, "Mouth region directory")->required();
  tpca->add_option("-K,--components", pca_k, "Number of eigenlips")->capture_default_str();
  tpca->add_option("--out", pca_out, "Model file")->required();

  // feat-eig
  auto *feig = app.add_subcommand("feat-eig", "Project mouth regions onto eigenlips");
  CorpusArgs eig_corpus;
  eig_corpus.Add(feig, true);
  std::string eig_model, eig_roi, eig_out;
  feig->add_option("--model", eig_model, "Eigenlip model")->required();
  feig->add_option("--roi", eig_roi, "Mouth region directory")->required();
  feig->add_option("--out", eig_out, "Output directory")->required();

  // train-ae
  auto *tae = app.add_subcommand("train-ae", "Train the convolutional autoencoder");
  CorpusArgs ae_corpus;
  ae_corpus.Add(tae, false);
  AutoencoderOptions ae_opts;
  std::string ae_roi, ae_out;
  tae->add_option("--roi", ae_roi, "Mouth region directory")->required();
  tae->add_option("--epochs", ae_opts.epochs, "Epochs")->capture_default_str();
  tae->add_option("--batch-size", ae_opts.batch_size, "Mini-batch size")->capture_default_str();
  tae->add_option("--learning-rate", ae_opts.learning_rate, "SGD step")->capture_default_str();
  tae->add_option("--momentum", ae_opts.momentum, "SGD momentum")->capture_default_str();
  tae->add_option("--bottleneck", ae_opts.arch.bottleneck, "Code size D")->capture_default_str();
  tae->add_option("--seed", ae_opts.seed, "Seed")->capture_default_str();
  tae->add_option("--out", ae_out, "Model file")->required();

  // feat-dnn
  auto *fdnn = app.add_subcommand("feat-dnn", "Autoencoder bottleneck features");
  CorpusArgs dnn_corpus;
  dnn_corpus.Add(fdnn, true);
  std::string dnn_model, dnn_roi, dnn_out;
  fdnn->add_option("--model", dnn_model, "Autoencoder model")->required();
  fdnn->add_option("--roi", dnn_roi, "Mouth region directory")->required();
  fdnn->add_option("--out", dnn_out, "Output directory")->required();

  // post
  auto *post = app.add_subcommand("post", "Normalize, add deltas and combine feature streams");
  CorpusArgs post_corpus;
  post_corpus.Add(post, true);
  std::vector<std::string> post_in;
  std::string post_norm = "none", post_out;
  int post_deltas = 0;
  post->add_option("--in", post_in, "Stream directories, combined in this order")->required();
  post->add_option("--normalize", post_norm, "z-score grouping")
      ->check(CLI::IsMember({"none", "speaker", "utterance"}))
      ->capture_default_str();
  post->add_option("--deltas", post_deltas, "Delta-delta context (0 = raw)")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
  post->add_option("--out", post_out, "Output directory")->required();

  // build-lm
  auto *blm = app.add_subcommand("build-lm", "Closed bigram LM from the test transcripts");
  CorpusArgs lm_corpus;
  lm_corpus.Add(blm, false);
  std::string lm_out, lm_arpa;
  blm->add_option("--out", lm_out, "ALM1 model file")->required();
  blm->add_option("--arpa", lm_arpa, "Also write the ARPA text form here");

  // train-hmm
  auto *thmm = app.add_subcommand("train-hmm", "Flat start and embedded EM training");
  CorpusArgs hmm_corpus;
  hmm_corpus.Add(thmm, false);
  std::string hmm_feats, hmm_out, topology = "skip2", schedule = "1,1,1,1,2,2,2,2,4,4,4,4,8,8,8,8";
  bool no_sil = false;
  double floor_factor = 1e-3;
  thmm->add_option("--features", hmm_feats, "Feature directory")->required();
  thmm->add_option("--topology", topology, "HMM topology")
      ->check(CLI::IsMember({"classic3", "skip2"}))
      ->capture_default_str();
  thmm->add_option("--schedule", schedule, "Mixture count per EM iteration")->capture_default_str();
  thmm->add_option("--floor-factor", floor_factor, "Variance floor relative to global variance")
      ->capture_default_str();
  thmm->add_flag("--no-silence", no_sil, "Disable the optional boundary silence model");
  thmm->add_option("--out", hmm_out, "Model file")->required();

  // align
  auto *align = app.add_subcommand("align", "Forced alignment of transcripts");
  CorpusArgs al_corpus;
  al_corpus.Add(align, true);
  std::string al_model, al_feats, al_out;
  align->add_option("--model", al_model, "Optical model")->required();
  align->add_option("--features", al_feats, "Feature directory")->required();
  align->add_option("--out", al_out, "Alignment file")->required();

  // decode
  auto *dec = app.add_subcommand("decode", "Viterbi beam decoding of the test partition");
  CorpusArgs dec_corpus;
  dec_corpus.Add(dec, false);
  DecodeConfig dcfg;
  std::string dec_model, dec_feats, dec_lm, dec_out;
  dec->add_option("--model", dec_model, "Optical model")->required();
  dec->add_option("--features", dec_feats, "Feature directory")->required();
  dec->add_option("--lm", dec_lm, "Bigram LM (.arpa or ALM1)")->required();
  dec->add_option("--lm-scale", dcfg.lm_scale, "LM weight")->capture_default_str();
  dec->add_option("--penalty", dcfg.word_insertion_penalty, "Word insertion log penalty")
      ->capture_default_str();
  dec->add_option("--beam", dcfg.beam, "Pruning beam (inf = exact)")->capture_default_str();
  dec->add_option("--out", dec_out, "Hypothesis file; timings go to <out>.times")->required();

  // score
  auto *score = app.add_subcommand("score", "WER with a bootstrap confidence interval");
  std::string ref_file, hyp_file, score_json;
  int samples = kDefaultBootstrapSamples;
  uint64_t score_seed = 1;
  score->add_option("--ref", ref_file, "Reference transcripts (utt<TAB>words)")->required();
  score->add_option("--hyp", hyp_file, "Hypotheses (utt<TAB>words)")->required();
  score->add_option("-B,--bootstrap", samples, "Bootstrap resamples")->capture_default_str();
  score->add_option("--seed", score_seed, "Bootstrap seed")->capture_default_str();
  score->add_option("--json", score_json, "Write the machine-readable report here");

  // run-grid
  auto *grid = app.add_subcommand("run-grid", "Full feature x delta x normalization grid");
  std::string grid_cfg, grid_out;
  std::vector<std::string> overrides;
  grid->add_option("--config", grid_cfg, "Experiment config (key = value)");
  grid->add_option("--set", overrides, "Override a config key (key=value)");
  grid->add_option("--out", grid_out, "Output directory")->required();
  grid->footer("Config keys and defaults:\n" + ConfigHelp());

  // write-refs
  auto *refs = app.add_subcommand("write-refs", "Reference transcripts of a partition");
  CorpusArgs refs_corpus;
  refs_corpus.Add(refs, true);
  std::string refs_out;
  refs->add_option("--out", refs_out, "Transcript file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }
  SetVerbose(!quiet);

  try {
    if (*synth) {
      if (!counts.empty()) spec.speaker_utterance_counts = ParseIntList(counts);
      const auto recs = SynthesizeCorpus(spec, synth_out);
      std::printf("wrote %zu utterances to %s\n", recs.size(), synth_out.c_str());
    } else if (*roi) {
      EnsureDir(roi_out);
      const auto recs = roi_corpus.Records();
      ParallelFor(
          recs.size(),
          [&](size_t i) {
            const auto &r = recs[i];
            try {
              const auto lmk = ReadLandmarkFile(r.landmark_path);
              const FrameStack stack = ReadFramesFile(r.frames_path);
              std::vector<MouthFrame> frames;
              for (size_t t = 0; t < lmk.size() && t < stack.size(); ++t)
                frames.push_back(ExtractAlignedRoi(lmk[t], stack.Frame(t), margin));
              WriteMouthFrames(fs::path(roi_out) / (r.utterance_id + ".frm"), frames);
            } catch (const std::exception &e) {
              throw Error("extract-roi: utterance " + r.utterance_id + ": " + e.what());
            }
          },
          jobs);
    } else if (*geo) {
      EnsureDir(geo_out);
      for (const auto &r : geo_corpus.Records())
        WriteFeatureArchive(fs::path(geo_out) / (r.utterance_id + ".vfa"),
                            GeometricStream(ReadLandmarkFile(r.landmark_path), r.utterance_id,
                                            r.speaker_id));
    } else if (*tpca) {
      const auto frames = LoadRoiSet(pca_roi, pca_corpus.LoadSplit().train);
      SaveEigenlipModel(pca_out, FitPca(frames, pca_k));
    } else if (*feig) {
      EnsureDir(eig_out);
      const EigenlipModel model = LoadEigenlipModel(eig_model);
      for (const auto &r : eig_corpus.Records())
        WriteFeatureArchive(fs::path(eig_out) / (r.utterance_id + ".vfa"),
                            EigenlipStream(model, LoadRoiFor(eig_roi, r), r.utterance_id,
                                           r.speaker_id));
    } else if (*tae) {
      const auto frames = LoadRoiSet(ae_roi, ae_corpus.LoadSplit().train);
      auto [model, report] = TrainAutoencoder(frames, ae_opts);
      model.Save(ae_out);
      std::printf("final reconstruction loss %.6f\n", report.epoch_losses.back());
    } else if (*fdnn) {
      EnsureDir(dnn_out);
      const ConvAutoencoder model = ConvAutoencoder::Load(dnn_model);
      for (const auto &r : dnn_corpus.Records())
        WriteFeatureArchive(fs::path(dnn_out) / (r.utterance_id + ".vfa"),
                            DeepStream(model, LoadRoiFor(dnn_roi, r), r.utterance_id,
                                       r.speaker_id));
    } else if (*post) {
      EnsureDir(post_out);
      const auto recs = post_corpus.Records();
      std::vector<std::vector<FeatureSequence>> streams;
      for (const auto &dir : post_in) {
        auto seqs = ZscoreNormalize(LoadFeatureSet(dir, recs), ParseNormalization(post_norm));
        if (post_deltas > 0)
          for (auto &s : seqs) s = AddDeltas(s, post_deltas);
        streams.push_back(std::move(seqs));
      }
      for (size_t u = 0; u < recs.size(); ++u) {
        std::vector<FeatureSequence> parts;
        for (const auto &s : streams) parts.push_back(s[u]);
        WriteFeatureArchive(fs::path(post_out) / (recs[u].utterance_id + ".vfa"),
                            CombineStreams(parts));
      }
    } else if (*blm) {
      std::vector<std::vector<std::string>> text;
      for (const auto &r : lm_corpus.LoadSplit().test) text.push_back(r.transcript);
      if (text.empty()) throw DegenerateSplitError("the test partition is empty");
      const BigramLm lm = EstimateClosedLm(text);
      lm.Save(lm_out);
      if (!lm_arpa.empty()) lm.WriteArpa(lm_arpa);
    } else if (*thmm) {
      const CorpusSplit split = hmm_corpus.LoadSplit();
      const Lexicon lex = hmm_corpus.LoadLex();
      std::vector<std::vector<std::string>> text;
      for (const auto &r : split.train) text.push_back(r.transcript);
      const auto feats = LoadFeatureSet(hmm_feats, split.train);
      FlatStartOptions fso;
      fso.topology = ParseTopology(topology);
      fso.use_silence = !no_sil;
      fso.variance_floor_factor = floor_factor;
      OpticalModel model = FlatStart(feats, text, lex, fso);
      TrainOptions to;
      to.mixture_schedule = ParseIntList(schedule);
      to.jobs = jobs;
      const TrainResult tr = TrainEm(model, feats, text, lex, to);
      model.Save(hmm_out);
      for (size_t i = 0; i < tr.log_likelihoods.size(); ++i)
        std::printf("iteration %zu M=%d log-likelihood %.6f\n", i + 1, tr.mixtures[i],
                    tr.log_likelihoods[i]);
    } else if (*align) {
      const OpticalModel model = OpticalModel::Load(al_model);
      const Lexicon lex = al_corpus.LoadLex();
      std::ofstream out(al_out);
      if (!out) throw IoError("cannot write " + al_out);
      for (const auto &r : al_corpus.Records()) {
        const FeatureSequence f = ReadFeatureArchive(fs::path(al_feats) / (r.utterance_id + ".vfa"));
        try {
          const Alignment a = ForcedAlign(model, f.frames, r.transcript, lex);
          out << r.utterance_id;
          for (const auto &seg : SegmentAlignment(a))
            out << '\t' << model.phone(seg.phone).name << ' ' << seg.begin << ' ' << seg.end;
          out << '\n';
        } catch (const AlignmentInfeasibleError &e) {
          throw AlignmentInfeasibleError("align: utterance " + r.utterance_id + ": " + e.what());
        }
      }
    } else if (*dec) {
      const OpticalModel model = OpticalModel::Load(dec_model);
      const Lexicon lex = dec_corpus.LoadLex();
      const BigramLm lm = LoadLm(dec_lm);
      const Decoder decoder(model, lex, lm, dcfg);
      const auto test = dec_corpus.LoadSplit().test;
      std::vector<std::pair<std::string, std::vector<std::string>>> hyps(test.size());
      std::vector<std::string> times(test.size());
      ParallelFor(
          test.size(),
          [&](size_t i) {
            const FeatureSequence f =
                ReadFeatureArchive(fs::path(dec_feats) / (test[i].utterance_id + ".vfa"));
            hyps[i].first = f.utterance_id;
            std::ostringstream os;
            os << f.utterance_id;
            try {
              const DecodeResult d = decoder.Decode(f.frames);
              hyps[i].second = d.words;
              for (size_t w = 0; w < d.words.size(); ++w)
                os << '\t' << d.words[w] << ' ' << d.boundaries[w].first << ' '
                   << d.boundaries[w].second;
            } catch (const EmptyBeamError &e) {
              LogWarning("decode: utterance " + f.utterance_id + ": " + e.what());
            }
            times[i] = os.str();
          },
          jobs);
      WriteHypotheses(dec_out, hyps);
      std::ofstream t(dec_out + ".times");
      for (const auto &line : times) t << line << '\n';
    } else if (*score) {
      std::map<std::string, std::vector<std::string>> refs_map, hyps_map;
      for (auto &[id, w] : ReadTranscriptFile(ref_file)) refs_map[id] = w;
      for (auto &[id, w] : ReadTranscriptFile(hyp_file)) hyps_map[id] = w;
      const WerReport report =
          BootstrapCi(ScoreUtterances(refs_map, hyps_map), samples, score_seed, jobs);
      if (!score_json.empty()) WriteWerReport(score_json, report);
      std::printf("%s\n", report.FormatLine().c_str());
    } else if (*grid) {
      ConfigMap map;
      if (!grid_cfg.empty()) map = ReadConfigFile(grid_cfg);
      for (const auto &o : overrides) ApplyOverride(map, o);
      Experiment exp(ExperimentConfig::FromMap(map), grid_out, jobs);
      const auto results = exp.RunGrid();
      std::printf("%s", FormatMarkdownTable(results).c_str());
    } else if (*refs) {
      std::vector<std::pair<std::string, std::vector<std::string>>> out;
      for (const auto &r : refs_corpus.Records()) out.push_back({r.utterance_id, r.transcript});
      WriteHypotheses(refs_out, out);
    }
  } catch (const Error &e) {
    std::fprintf(stderr, "vsrlab: error: %s\n", e.what());
    return 1;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "vsrlab: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
