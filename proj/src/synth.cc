// src/synth.cc

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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <system_error>

#include "vsr/corpus.h"
#include "vsr/error.h"
#include "vsr/util.h"

namespace vsr {

namespace {

constexpr int kSilence = -1;

struct SpeakerProfile {
  double jaw_px = 56.0;
  double skin = 0.7;
  double lip = 0.45;
  double cavity = 0.08;
  double upper_lip = 0.04;  // thickness, jaw units
  double lower_lip = 0.05;
  double width_factor = 1.0;
  double height_factor = 1.0;
  std::vector<MouthShape> offsets;  // per phoneme (index 0 = silence)
};

std::mt19937_64 MakeRng(uint64_t seed, uint64_t stream, uint64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), static_cast<uint32_t>(index),
                    static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double Uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double Gauss(std::mt19937_64 &rng, double sd) {
  if (sd <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sd)(rng);
}

SpeakerProfile MakeSpeaker(const SynthSpec &spec, int s) {
  auto rng = MakeRng(spec.seed, 1, static_cast<uint64_t>(s));
  SpeakerProfile p;
  p.jaw_px = Uniform(rng, 52.0, 60.0);
  p.skin = Uniform(rng, 0.62, 0.78);
  p.lip = p.skin - Uniform(rng, 0.18, 0.26);
  p.upper_lip = Uniform(rng, 0.035, 0.05);
  p.lower_lip = Uniform(rng, 0.045, 0.06);
  p.width_factor = Uniform(rng, 0.93, 1.07);
  p.height_factor = Uniform(rng, 0.9, 1.1);
  p.offsets.resize(spec.phoneme_inventory.size() + 1);
  for (auto &o : p.offsets) {
    o.width = Gauss(rng, 0.012);
    o.height = Gauss(rng, 0.006);
    o.curl = Gauss(rng, 0.004);
    o.teeth = Gauss(rng, 0.03);
  }
  return p;
}

MouthShape SpeakerTarget(const SpeakerProfile &spk, int phoneme) {
  MouthShape base = PhonemeTarget(phoneme);
  const MouthShape &o = spk.offsets[phoneme + 1];
  MouthShape s;
  s.width = (base.width + o.width) * spk.width_factor;
  s.height = std::max(0.0, (base.height + (base.height > 0 ? o.height : 0.0)) * spk.height_factor);
  s.curl = base.curl + o.curl;
  s.teeth = std::clamp(base.teeth + o.teeth, 0.0, 1.0);
  return s;
}

MouthShape Lerp(const MouthShape &a, const MouthShape &b, double t) {
  return {a.width + t * (b.width - a.width), a.height + t * (b.height - a.height),
          a.curl + t * (b.curl - a.curl), a.teeth + t * (b.teeth - a.teeth)};
}

// Face geometry in jaw units with the mouth centre at the origin, y down.
LandmarkFrame LocalFace(const MouthShape &m, const SpeakerProfile &spk) {
  LandmarkFrame f;
  auto &p = f.points;
  constexpr double kPi = std::numbers::pi;
  const double jaw_rx = 0.5 / std::cos(kPi / 8.0);
  for (int k = 0; k <= 16; ++k) {
    double phi = kPi * k / 16.0;
    p[k] = {-jaw_rx * std::cos(phi), -0.35 + 0.55 * std::sin(phi)};
  }
  for (int k = 0; k < 10; ++k) p[17 + k] = {-0.42 + 0.84 * k / 9.0, -0.85 - 0.04 * std::sin(kPi * (k % 5) / 4.0)};
  for (int k = 0; k < 4; ++k) p[27 + k] = {0.0, -0.75 + 0.11 * k};
  for (int k = 0; k < 5; ++k) p[31 + k] = {-0.1 + 0.05 * k, -0.32 + 0.02 * std::abs(k - 2)};
  for (int eye = 0; eye < 2; ++eye) {
    double cx = eye == 0 ? -0.22 : 0.22;
    for (int k = 0; k < 6; ++k) {
      double a = kPi * k / 3.0;
      p[36 + 6 * eye + k] = {cx - 0.07 * std::cos(a), -0.62 - 0.03 * std::sin(a)};
    }
  }

  const double w = m.width, h = m.height, wi = 0.78 * w;
  const double tu = spk.upper_lip, tl = spk.lower_lip;
  auto lift = [&](double x) { return -m.curl * (2.0 * x / w) * (2.0 * x / w); };
  p[48] = {-w / 2, lift(-w / 2)};
  p[54] = {w / 2, lift(w / 2)};
  const double ux[5] = {-1.0 / 3, -1.0 / 6, 0.0, 1.0 / 6, 1.0 / 3};
  const double uprof[5] = {0.75, 1.0, 0.9, 1.0, 0.75};
  for (int k = 0; k < 5; ++k) {
    double x = w * ux[k];
    p[49 + k] = {x, lift(x) - (h / 2 + tu) * uprof[k]};
  }
  const double lprof[5] = {0.75, 0.95, 1.0, 0.95, 0.75};
  for (int k = 0; k < 5; ++k) {
    double x = -w * ux[k];
    p[55 + k] = {x, lift(x) + (h / 2 + tl) * lprof[k]};
  }
  p[60] = {-wi / 2, lift(-wi / 2)};
  p[64] = {wi / 2, lift(wi / 2)};
  const double ix[3] = {-0.25, 0.0, 0.25};
  const double iprof[3] = {0.85, 1.0, 0.85};
  for (int k = 0; k < 3; ++k) {
    double x = wi * ix[k];
    p[61 + k] = {x, lift(x) - h / 2 * iprof[k]};
    double xb = -wi * ix[k];
    p[65 + k] = {xb, lift(xb) + h / 2 * iprof[k]};
  }
  return f;
}

bool InsidePolygon(const std::vector<Point> &poly, double x, double y) {
  bool inside = false;
  for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point &a = poly[i], &b = poly[j];
    if ((a.y > y) != (b.y > y)) {
      double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

struct Placement {
  Point center;
  double cos_t = 1.0;
  double sin_t = 0.0;
  double scale = 56.0;

  Point ToImage(Point local) const {
    double x = scale * local.x, y = scale * local.y;
    return {center.x + cos_t * x - sin_t * y, center.y + sin_t * x + cos_t * y};
  }
  Point ToLocal(Point img) const {
    double dx = img.x - center.x, dy = img.y - center.y;
    return {(cos_t * dx + sin_t * dy) / scale, (-sin_t * dx + cos_t * dy) / scale};
  }
};

void RenderFrame(const LandmarkFrame &local, const MouthShape &m, const SpeakerProfile &spk,
                 const Placement &place, double noise, std::mt19937_64 &rng,
                 int width, int height, uint8_t *out) {
  std::vector<Point> outer, inner;
  for (int k = 48; k < 60; ++k) outer.push_back(place.ToImage(local.points[k]));
  for (int k = 60; k < 68; ++k) inner.push_back(place.ToImage(local.points[k]));
  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (const auto &p : outer) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int bx0 = std::max(0, static_cast<int>(std::floor(x0)) - 1);
  const int bx1 = std::min(width - 1, static_cast<int>(std::ceil(x1)) + 1);
  const int by0 = std::max(0, static_cast<int>(std::floor(y0)) - 1);
  const int by1 = std::min(height - 1, static_cast<int>(std::ceil(y1)) + 1);
  const bool open = m.height > 1e-9;
  auto lift = [&](double x) { return -m.curl * (2.0 * x / m.width) * (2.0 * x / m.width); };

  constexpr int kSub = 3;
  std::normal_distribution<double> pixel_noise(0.0, noise > 0 ? noise : 1.0);
  for (int y = 0; y < height; ++y) {
    const double shade = spk.skin * (1.0 - 0.12 * (static_cast<double>(y) / height - 0.5));
    for (int x = 0; x < width; ++x) {
      double v = shade;
      if (x >= bx0 && x <= bx1 && y >= by0 && y <= by1) {
        double acc = 0.0;
        for (int sy = 0; sy < kSub; ++sy)
          for (int sx = 0; sx < kSub; ++sx) {
            double px = x + (sx + 0.5) / kSub, py = y + (sy + 0.5) / kSub;
            double s = shade;
            if (InsidePolygon(outer, px, py)) {
              s = spk.lip;
              if (open && InsidePolygon(inner, px, py)) {
                Point l = place.ToLocal({px, py});
                s = l.y < lift(l.x) ? m.teeth : spk.cavity;
              }
            }
            acc += s;
          }
        v = acc / (kSub * kSub);
      }
      if (noise > 0) v += pixel_noise(rng);
      out[static_cast<size_t>(y) * width + x] = QuantizeIntensity(static_cast<float>(v));
    }
  }
}

}  // namespace

MouthShape PhonemeTarget(int phoneme_index) {
  if (phoneme_index == kSilence) return {0.38, 0.0, 0.0, 0.5};
  static const double kWidths[3] = {0.34, 0.42, 0.50};
  static const double kHeights[4] = {0.0, 0.045, 0.09, 0.135};
  static const double kCurls[2] = {-0.02, 0.02};
  static const double kTeeth[3] = {0.4, 0.65, 0.9};
  const int i = phoneme_index;
  return {kWidths[i % 3], kHeights[(i / 3) % 4], kCurls[(i / 12) % 2],
          kTeeth[(i + i / 3) % 3]};
}

Lexicon DefaultSynthLexicon() {
  static const char *kWords[] = {"casa",  "perro", "gato",  "agua",  "mesa",
                                 "libro", "noche", "ciudad", "tiempo", "mundo",
                                 "vida",  "madre", "padre", "calle", "mano",
                                 "fuego", "cielo", "playa", "queso", "hoy"};
  Lexicon lex;
  for (const char *w : kWords) lex.Add(w, SpanishG2P(w));
  return lex;
}

SynthSpec DefaultSynthSpec() {
  SynthSpec spec;
  spec.phoneme_inventory = SpanishPhonemeInventory();
  spec.lexicon = DefaultSynthLexicon();
  return spec;
}

void SynthSpec::Validate() const {
  if (phoneme_inventory.empty()) throw ConfigError("empty phoneme inventory");
  if (phoneme_inventory.size() > 24)
    throw ConfigError("at most 24 phonemes have distinct synthetic mouth targets");
  if (lexicon.empty()) throw ConfigError("empty synthesis lexicon");
  try {
    lexicon.Validate(phoneme_inventory);
  } catch (const LexiconError &e) {
    throw ConfigError(std::string("synthesis lexicon: ") + e.what());
  }
  if (n_speakers < 1) throw ConfigError("n_speakers must be at least 1");
  if (n_utterances < 0) throw ConfigError("n_utterances must be nonnegative");
  if (!speaker_utterance_counts.empty()) {
    if (static_cast<int>(speaker_utterance_counts.size()) != n_speakers)
      throw ConfigError("speaker_utterance_counts must list one count per speaker");
    int sum = 0;
    for (int c : speaker_utterance_counts) {
      if (c < 0) throw ConfigError("negative speaker utterance count");
      sum += c;
    }
    if (sum != n_utterances) throw ConfigError("speaker_utterance_counts must sum to n_utterances");
  }
  if (frames_per_phoneme_mean < 2.0) throw ConfigError("frames_per_phoneme mean must be >= 2");
  if (frames_per_phoneme_stddev < 0.0 || silence_frames_mean < 0.0 || noise_level < 0.0)
    throw ConfigError("negative synthesis parameter");
  if (min_words < 1 || max_words < min_words) throw ConfigError("bad words-per-utterance range");
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
  if (image_width < 48 || image_height < 40) throw ConfigError("image too small");
}

std::vector<UtteranceRecord> SynthesizeCorpus(const SynthSpec &spec,
                                              const std::filesystem::path &out_dir) {
  spec.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "data", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "data").string() + ": " + ec.message());

  std::map<std::string, int> phoneme_index;
  for (size_t i = 0; i < spec.phoneme_inventory.size(); ++i)
    phoneme_index[spec.phoneme_inventory[i]] = static_cast<int>(i);

  std::vector<std::string> words;
  for (const auto &[w, prons] : spec.lexicon.entries()) words.push_back(w);

  // Sparse successor grammar: transcripts carry bigram structure.
  auto grammar_rng = MakeRng(spec.seed, 2, 0);
  std::vector<std::vector<int>> successors(words.size());
  const int fanout = std::min<int>(4, static_cast<int>(words.size()));
  for (auto &succ : successors) {
    std::vector<int> all(words.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    std::shuffle(all.begin(), all.end(), grammar_rng);
    succ.assign(all.begin(), all.begin() + fanout);
  }

  std::vector<int> counts = spec.speaker_utterance_counts;
  if (counts.empty()) {
    counts.assign(spec.n_speakers, spec.n_utterances / spec.n_speakers);
    for (int s = 0; s < spec.n_utterances % spec.n_speakers; ++s) ++counts[s];
  }

  std::vector<SpeakerProfile> speakers;
  for (int s = 0; s < spec.n_speakers; ++s) speakers.push_back(MakeSpeaker(spec, s));

  std::vector<UtteranceRecord> records;
  int utt_index = 0;
  for (int s = 0; s < spec.n_speakers; ++s) {
    char spk_id[32];
    std::snprintf(spk_id, sizeof(spk_id), "spk%02d", s + 1);
    for (int u = 0; u < counts[s]; ++u, ++utt_index) {
      auto rng = MakeRng(spec.seed, 3, static_cast<uint64_t>(utt_index));
      char utt_id[48];
      std::snprintf(utt_id, sizeof(utt_id), "%s_%04d", spk_id, utt_index + 1);

      int n_words = std::uniform_int_distribution<int>(spec.min_words, spec.max_words)(rng);
      std::vector<std::string> transcript;
      int w = std::uniform_int_distribution<int>(0, static_cast<int>(words.size()) - 1)(rng);
      for (int k = 0; k < n_words; ++k) {
        transcript.push_back(words[w]);
        const auto &succ = successors[w];
        w = succ[std::uniform_int_distribution<int>(0, static_cast<int>(succ.size()) - 1)(rng)];
      }

      // Segment sequence with per-segment durations.
      std::vector<std::pair<int, int>> segments;  // (phoneme, frames)
      auto draw = [&](double mean, double sd) {
        return std::max(1, static_cast<int>(std::lround(mean + Gauss(rng, sd))));
      };
      if (spec.silence_frames_mean > 0) segments.push_back({kSilence, draw(spec.silence_frames_mean, 1.0)});
      for (const auto &word : transcript) {
        const auto &pron = spec.lexicon.Pronunciations(word).front();
        for (const auto &ph : pron)
          segments.push_back({phoneme_index.at(ph),
                              draw(spec.frames_per_phoneme_mean, spec.frames_per_phoneme_stddev)});
      }
      if (spec.silence_frames_mean > 0) segments.push_back({kSilence, draw(spec.silence_frames_mean, 1.0)});

      const SpeakerProfile &spk = speakers[s];
      Placement place;
      const double tilt = Uniform(rng, -12.0, 12.0) * std::numbers::pi / 180.0;
      place.cos_t = std::cos(tilt);
      place.sin_t = std::sin(tilt);
      place.scale = spk.jaw_px;
      place.center = {spec.image_width / 2.0 + Uniform(rng, -3.0, 3.0),
                      spec.image_height * 0.58 + Uniform(rng, -2.0, 2.0)};

      std::vector<LandmarkFrame> landmarks;
      FrameStack frames;
      frames.width = spec.image_width;
      frames.height = spec.image_height;
      const size_t frame_bytes = static_cast<size_t>(frames.width) * frames.height;
      const double coord_noise = spec.noise_level * 0.05 * spk.jaw_px;
      MouthShape prev = SpeakerTarget(spk, segments.front().first);
      for (size_t seg = 0; seg < segments.size(); ++seg) {
        const MouthShape target = SpeakerTarget(spk, segments[seg].first);
        for (int k = 0; k < segments[seg].second; ++k) {
          double alpha = seg == 0 ? 1.0 : std::min(1.0, (k + 1) / 2.0);
          MouthShape m = Lerp(prev, target, alpha);
          LandmarkFrame local = LocalFace(m, spk);
          LandmarkFrame img;
          for (int p = 0; p < kNumLandmarks; ++p) {
            Point q = place.ToImage(local.points[p]);
            q.x += Gauss(rng, coord_noise);
            q.y += Gauss(rng, coord_noise);
            img.points[p] = q;
          }
          landmarks.push_back(img);
          frames.data.resize(frames.data.size() + frame_bytes);
          RenderFrame(local, m, spk, place, spec.noise_level, rng, frames.width, frames.height,
                      frames.data.data() + frames.data.size() - frame_bytes);
        }
        prev = target;
      }

      UtteranceRecord r;
      r.utterance_id = utt_id;
      r.speaker_id = spk_id;
      r.transcript = transcript;
      r.frame_rate = spec.frame_rate;
      r.duration = landmarks.size() / spec.frame_rate;
      r.landmark_path = out_dir / "data" / (r.utterance_id + ".lmk");
      r.frames_path = out_dir / "data" / (r.utterance_id + ".frm");
      WriteLandmarkFile(r.landmark_path, landmarks);
      WriteFramesFile(r.frames_path, frames);
      records.push_back(std::move(r));
    }
  }
  WriteLexicon(out_dir / "lexicon.txt", spec.lexicon);
  WriteManifest(out_dir / "manifest.tsv", records, out_dir);
  return records;
}

}  // namespace vsr
