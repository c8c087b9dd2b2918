// tests/cli_test.cc

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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "test_util.h"
#include "vsr/corpus.h"
#include "vsr/decoder.h"
#include "vsr/features.h"
#include "vsr/optical_model.h"

namespace vsr {
namespace {

namespace fs = std::filesystem;

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run Vsrlab(const testing::TempDir &dir, const std::string &args) {
  const std::string bin = testing::VsrlabBinary();
  REQUIRE_MESSAGE(!bin.empty(), "VSRLAB_BIN is not set");
  const std::string cmd = "'" + bin + "' " + args + " > '" + (dir / "stdout").string() + "' 2> '" +
                          (dir / "stderr").string() + "'";
  const int rc = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = Slurp(dir / "stdout");
  r.err = Slurp(dir / "stderr");
  return r;
}

TEST_CASE("usage errors exit with status 2") {
  testing::TempDir dir;
  CHECK(Vsrlab(dir, "").status == 2);
  CHECK(Vsrlab(dir, "no-such-command").status == 2);
  CHECK(Vsrlab(dir, "decode --model m.opt").status == 2);
  CHECK(Vsrlab(dir, "post --manifest m --in x --out y --normalize global").status == 2);
  const Run help = Vsrlab(dir, "--help");
  CHECK(help.status == 0);
  CHECK(help.out.find("run-grid") != std::string::npos);
  const Run version = Vsrlab(dir, "--version");
  CHECK(version.out.find("1.0.0") != std::string::npos);
}

TEST_CASE("runtime errors exit with status 1 and a message") {
  testing::TempDir dir;
  const Run missing = Vsrlab(dir, "feat-geo --manifest " + (dir / "none.tsv").string() +
                                      " --out " + (dir / "geo").string());
  CHECK(missing.status == 1);
  CHECK(missing.err.find("vsrlab: error:") != std::string::npos);

  std::ofstream(dir / "bad.conf") << "decode.beem = 3\n";
  const Run cfg = Vsrlab(dir, "run-grid --config " + (dir / "bad.conf").string() + " --out " +
                                  (dir / "g").string());
  CHECK(cfg.status == 1);
  CHECK(cfg.err.find("decode.beem") != std::string::npos);
}

TEST_CASE("step by step pipeline") {
  testing::TempDir dir;
  const std::string c = (dir / "corpus").string();
  const std::string man = "--manifest " + c + "/manifest.tsv --min-seconds 20";
  auto ok = [&](const std::string &args) {
    const Run r = Vsrlab(dir, "-q " + args);
    CHECK_MESSAGE(r.status == 0, args << "\n" << r.err);
    return r;
  };
  ok("synth-corpus --seed 5 --speakers 3 --utterances 46 --speaker-counts 20,20,6 " + c);
  CHECK(LoadManifest(dir / "corpus" / "manifest.tsv").size() == 46);

  const std::string d = dir.path().string();
  ok("extract-roi " + man + " --out " + d + "/roi");
  ok("feat-geo " + man + " --out " + d + "/geo");
  ok("train-pca " + man + " --roi " + d + "/roi -K 8 --out " + d + "/pca.eig");
  ok("feat-eig " + man + " --model " + d + "/pca.eig --roi " + d + "/roi --out " + d + "/eig");
  ok("post " + man + " --in " + d + "/geo " + d + "/eig --normalize speaker --deltas 1 --out " + d +
     "/feats");
  const FeatureSequence f = ReadFeatureArchive(dir / "feats" / "spk01_0001.vfa");
  CHECK(f.Dim() == (18 + 8) * 3);
  CHECK(f.stream_tag == "geo+eig");

  ok("build-lm " + man + " --out " + d + "/lm.alm --arpa " + d + "/lm.arpa");
  const Run train = ok("train-hmm " + man + " --features " + d + "/feats --schedule 1,1,1,2,2 --out " +
                       d + "/hmm.opt");
  CHECK(train.out.find("iteration 5 M=2") != std::string::npos);
  ok("align " + man + " --subset train --model " + d + "/hmm.opt --features " + d +
     "/feats --out " + d + "/ali.txt");
  CHECK(Slurp(dir / "ali.txt").find("spk01_0001\t") != std::string::npos);

  ok("decode " + man + " --model " + d + "/hmm.opt --features " + d + "/feats --lm " + d +
     "/lm.arpa --beam inf --out " + d + "/hyp.txt");
  CHECK(ReadTranscriptFile(dir / "hyp.txt").size() == 6);
  CHECK(fs::exists(dir / "hyp.txt.times"));
  ok("write-refs " + man + " --subset test --out " + d + "/ref.txt");
  const Run score = ok("score --ref " + d + "/ref.txt --hyp " + d + "/hyp.txt -B 200 --json " + d +
                       "/wer.json");
  CHECK(score.out.rfind("WER ", 0) == 0);
  CHECK(Slurp(dir / "wer.json").find("\"ci_low\"") != std::string::npos);
}

}  // namespace
}  // namespace vsr
