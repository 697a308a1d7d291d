#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "naon/model.hpp"

namespace fs = std::filesystem;
using naon::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result naon_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("naon_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void tiny_corpora() {
    write_text(path("synth.txt"), "paragraph_count = 24\nn_range = 2,4\nvocab_size = 16\n");
    ASSERT_EQ(naon_cli({"synth", "--config", path("synth.txt"), "--out", path("train.jsonl")}).code, 0);
    ASSERT_EQ(naon_cli({"synth", "--config", path("synth.txt"), "--set", "seed=9", "--set",
                        "paragraph_count=8", "--out", path("valid.jsonl")})
                  .code,
              0);
    write_text(path("train.txt"),
               "# tiny model\nvocab_size = 16\nd_model = 8\nheads = 2\nencoder_blocks = 1\n"
               "decoder_blocks = 1\nffn_dim = 16\nbatch_size = 4\nmax_epochs = 2\nlr = 1e-2\n");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthWritesRequestedCountDeterministically) {
  write_text(path("s.txt"), "paragraph_count = 37\nseed = 4\ncue_style = chain\n");
  const Result r = naon_cli({"synth", "--config", path("s.txt"), "--out", path("a.jsonl")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(path("a.jsonl")), 37u);
  naon_cli({"synth", "--config", path("s.txt"), "--out", path("b.jsonl")});
  EXPECT_EQ(read_text(path("a.jsonl")), read_text(path("b.jsonl")));
  naon_cli({"--seed", "5", "synth", "--config", path("s.txt"), "--out", path("c.jsonl")});
  EXPECT_NE(read_text(path("a.jsonl")), read_text(path("c.jsonl")));
}

TEST_F(Cli, SynthVocabTooSmall) {
  write_text(path("s.txt"), "vocab_size = 1\nn_range = 3,8\n");
  const Result r = naon_cli({"synth", "--config", path("s.txt"), "--out", path("a.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("vocab too small"), std::string::npos) << r.err;
}

TEST_F(Cli, SynthUnknownKeyNamesLine) {
  write_text(path("s.txt"), "seed = 1\nflavour = mint\n");
  const Result r = naon_cli({"synth", "--config", path("s.txt"), "--out", path("a.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("flavour"), std::string::npos);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(Cli, TrainThenEvaluate) {
  tiny_corpora();
  const Result t = naon_cli({"train", "--config", path("train.txt"), "--train", path("train.jsonl"),
                             "--valid", path("valid.jsonl"), "--out", path("run")});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(fs::exists(path("run/best.ckpt")));
  EXPECT_TRUE(fs::exists(path("run/config.txt")));
  EXPECT_EQ(line_count(path("run/history.jsonl")), 2u);
  const auto first = nlohmann::json::parse(read_text(path("run/history.jsonl")).substr(0, read_text(path("run/history.jsonl")).find('\n')));
  for (const char* key : {"epoch", "train_loss", "train_lc", "train_lex", "valid_acc", "valid_pmr", "valid_tau"})
    EXPECT_TRUE(first.contains(key)) << key;

  const Result e = naon_cli({"eval", "--checkpoint", path("run/best.ckpt"), "--corpus", path("valid.jsonl")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("PMR"), std::string::npos);
  const auto rec = nlohmann::json::parse(read_text(path("run/metrics_greedy.json")));
  for (const char* key : {"acc", "pmr", "tau", "head_acc", "tail_acc", "prr", "msrr"}) EXPECT_TRUE(rec.contains(key));
  EXPECT_EQ(rec["prr"], 0.0);
  EXPECT_EQ(rec["msrr"], 0.0);

  const Result raw = naon_cli({"eval", "--checkpoint", path("run/best.ckpt"), "--corpus", path("valid.jsonl"),
                               "--decode", "raw", "--out", path("raw.json")});
  ASSERT_EQ(raw.code, 0) << raw.err;
  EXPECT_EQ(nlohmann::json::parse(read_text(path("raw.json")))["decode"], "raw_argmax");
}

TEST_F(Cli, UntrainedModelRepeatsUnderRawDecoding) {
  // A fresh model scores sentences nearly independently of position, so
  // per-row argmax mostly picks the same sentence.
  naon::ModelConfig mc;
  mc.vocab_size = 64;
  mc.d_model = 16;
  mc.heads = 2;
  naon::Model(mc, 1).save(path("fresh.ckpt"));
  write_text(path("s.txt"), "paragraph_count = 100\nn_range = 6,8\n");
  ASSERT_EQ(naon_cli({"synth", "--config", path("s.txt"), "--out", path("c.jsonl")}).code, 0);
  const Result r = naon_cli({"eval", "--checkpoint", path("fresh.ckpt"), "--corpus", path("c.jsonl"),
                             "--decode", "raw"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rec = nlohmann::json::parse(read_text(path("metrics_raw_argmax.json")));
  EXPECT_GE(rec["prr"].get<double>(), 90.0);
}

TEST_F(Cli, UnknownDecoderIsUsageError) {
  const Result r = naon_cli({"eval", "--checkpoint", "x.ckpt", "--corpus", "x.jsonl", "--decode", "beam"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--decode"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingFilesAndMalformedInput) {
  EXPECT_EQ(naon_cli({"eval", "--checkpoint", path("none.ckpt"), "--corpus", path("none.jsonl")}).code, 2);
  EXPECT_EQ(naon_cli({}).code, 2);
  EXPECT_EQ(naon_cli({"frobnicate"}).code, 2);
  tiny_corpora();
  write_text(path("bad.jsonl"), "{\"sentences\": [[1], [2]], \"gold_order\": [1, 1]}\n");
  const Result r = naon_cli({"train", "--config", path("train.txt"), "--train", path("bad.jsonl"),
                             "--valid", path("valid.jsonl"), "--out", path("run")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("not a permutation"), std::string::npos) << r.err;
}

TEST_F(Cli, DivergentTrainingExitsThree) {
  tiny_corpora();
  const Result r = naon_cli({"train", "--config", path("train.txt"), "--set", "lr=1e300", "--set",
                             "grad_clip=0", "--train", path("train.jsonl"), "--valid",
                             path("valid.jsonl"), "--out", path("run")});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("epoch"), std::string::npos) << r.err;
}

TEST_F(Cli, OrderMatchesGolden) {
  const fs::path data = NAON_TEST_DATA_DIR;
  const Result r = naon_cli({"order", "--checkpoint", (data / "tiny.ckpt").string(), "--in",
                             (data / "order_in.jsonl").string(), "--out", path("ordered.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  if (std::getenv("NAON_REGENERATE_GOLDEN")) fs::copy_file(path("ordered.jsonl"), data / "order_out.jsonl",
                                                           fs::copy_options::overwrite_existing);
  EXPECT_EQ(read_text(path("ordered.jsonl")), read_text(data / "order_out.jsonl"));
}

TEST_F(Cli, OrderAcceptsTextWithVocabulary) {
  const fs::path data = NAON_TEST_DATA_DIR;
  write_text(path("vocab.txt"), "<unk>\nthe\ncat\nsat\n");
  write_text(path("in.jsonl"), "{\"sentences\": [\"cat sat\", \"the cat\", \"sat\"]}\n");
  const Result r = naon_cli({"order", "--checkpoint", (data / "tiny.ckpt").string(), "--in", path("in.jsonl"),
                             "--vocab", path("vocab.txt"), "--out", path("o.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_text(path("o.jsonl")));
  ASSERT_EQ(j["order"].size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(j["sentences"][i], std::vector<std::string>({"cat sat", "the cat", "sat"})[j["order"][i].get<std::size_t>()]);
  write_text(path("bad.jsonl"), "{\"sentences\": [[1], []]}\n");
  EXPECT_EQ(naon_cli({"order", "--checkpoint", (data / "tiny.ckpt").string(), "--in", path("bad.jsonl"),
                      "--out", path("o2.jsonl")})
                .code,
            2);
}
