#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(VITLENS_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("vitlens_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string config(const std::string& name, int depth, int heads, int dim, int image, int patch, bool cls = false) {
    nlohmann::json j{{"depth", depth},      {"heads", heads},  {"dim", dim}, {"image_size", image},
                     {"patch_size", patch}, {"channels", 3}, {"use_cls", cls}};
    std::ofstream(path(name)) << j.dump();
    return path(name);
  }

  fs::path dir_;
};

double tail_mean(const std::vector<std::vector<std::string>>& rows, int layer, int reference) {
  double sum = 0;
  int count = 0;
  for (const auto& r : rows)
    if (std::stoi(r[0]) == layer && std::stoi(r[1]) > reference) sum += std::stod(r[3]), ++count;
  return sum / count;
}

}  // namespace

TEST_F(Cli, HelpDocumentsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags{
      {"dump", {"--config", "--weights-seed", "--images", "--synthetic", "--restrict-kernel", "--out"}},
      {"attn-stats", {"--in", "--out", "--svg", "--json"}},
      {"repr-stats", {"--in", "--out", "--svg"}},
      {"fourier", {"--in", "--out", "--bins"}},
      {"svd", {"--in", "--out", "--level", "--reference"}},
      {"noise", {"--rms", "--seed", "--window", "--out"}},
      {"probe", {"--in", "--labels", "--epochs", "--seed", "--out"}},
      {"hybrid-eval", {"--view1", "--view2", "--lambda", "--mask-ratio", "--mask-seed"}},
      {"replay", {"--manifest"}},
  };
  for (const auto& [cmd, expected] : flags) {
    const auto r = run(cmd + " --help");
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : expected) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
  EXPECT_EQ(run("--version").code, 0);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, DumpIsDeterministic) {
  const auto cfg = config("c.json", 2, 2, 16, 16, 4);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 4 --weights-seed 3 --out " + path("a")).code, 0);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 4 --weights-seed 3 --out " + path("b")).code, 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(path("a"))) {
    if (e.path().extension() != ".nad") continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 4);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "dump");
  EXPECT_EQ(manifest["outputs"].size(), 5u);  // four bundles and labels.csv
  EXPECT_EQ(manifest["seeds"]["weights"], 3);
  for (const auto& o : manifest["outputs"]) EXPECT_EQ(o["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, ExitCodes) {
  const auto cfg = config("c.json", 1, 2, 8, 8, 4);
  EXPECT_EQ(run("dump --config " + cfg + " --synthetic 1 --restrict-kernel 2 --out " + path("x")).code, 2);
  fs::create_directories(path("empty"));
  EXPECT_EQ(run("attn-stats --in " + path("empty") + " --out " + path("e.csv")).code, 3);
  EXPECT_EQ(run("dump --config " + cfg + " --images " + path("empty") + " --out " + path("y")).code, 3);
  EXPECT_EQ(run("attn-stats --in " + path("missing") + " --out " + path("e.csv")).code, 2);

  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 1 --out " + path("mixed")).code, 0);
  const auto other = config("o.json", 1, 2, 16, 8, 4);
  ASSERT_EQ(run("dump --config " + other + " --synthetic 2 --out " + path("other")).code, 0);
  fs::copy_file(dir_ / "other" / "synthetic_00001.nad", dir_ / "mixed" / "zzz.nad");
  EXPECT_EQ(run("attn-stats --in " + path("mixed") + " --out " + path("m.csv")).code, 2);
}

TEST_F(Cli, AttnStatsRowCountAndDeterminism) {
  const auto cfg = config("c.json", 3, 2, 16, 16, 4, true);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 1 --out " + path("d")).code, 0);
  ASSERT_EQ(run("attn-stats --in " + path("d") + " --out " + path("a.csv") + " --json " + path("a.json") + " --svg " +
                path("a.svg"))
                .code,
            0);
  EXPECT_EQ(read_csv(path("a.csv")).size(), 3u * 2 * 2 + 3);
  const std::string first = slurp(path("a.csv"));
  ASSERT_EQ(run("attn-stats --in " + path("d") + " --out " + path("a.csv")).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), first);
  EXPECT_NE(slurp(path("a.svg")).find("<polyline"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(path("a.json")));
  EXPECT_EQ(j["nmi"].size(), 3u);
}

TEST_F(Cli, RestrictedKernelShortensDistances) {
  const auto cfg = config("c.json", 2, 2, 16, 32, 4);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 2 --init-std 0.3 --out " + path("full")).code, 0);
  ASSERT_EQ(
      run("dump --config " + cfg + " --synthetic 2 --init-std 0.3 --restrict-kernel 3 --out " + path("local")).code, 0);
  ASSERT_EQ(run("attn-stats --in " + path("full") + " --out " + path("full.csv")).code, 0);
  ASSERT_EQ(run("attn-stats --in " + path("local") + " --out " + path("local.csv")).code, 0);
  const auto full = read_csv(path("full.csv")), local = read_csv(path("local.csv"));
  ASSERT_EQ(full.size(), local.size());
  int compared = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full[i][2] != "distance") continue;
    EXPECT_LE(std::stod(local[i][3]), std::stod(full[i][3]));
    ++compared;
  }
  EXPECT_EQ(compared, 4);
}

TEST_F(Cli, FourierRowsPerLayer) {
  const auto cfg = config("c.json", 3, 2, 16, 32, 4);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 2 --out " + path("d")).code, 0);
  ASSERT_EQ(run("fourier --in " + path("d") + " --out " + path("f.csv") + " --bins 11 --svg " + path("f.svg")).code, 0);
  const auto rows = read_csv(path("f.csv"));
  EXPECT_EQ(rows.size(), 11u * 3);
  EXPECT_EQ(std::stod(rows[0][3]), 0.0);
}

TEST_F(Cli, SvdCollapsedRunDecaysFaster) {
  const auto cfg = config("c.json", 8, 4, 32, 32, 4);
  const std::string common = " --config " + cfg + " --synthetic 3 --init-std 1.5 --weights-seed 1";
  ASSERT_EQ(run("dump" + common + " --out " + path("control")).code, 0);
  ASSERT_EQ(run("dump" + common + " --uniform-from 4 --out " + path("forced")).code, 0);
  ASSERT_EQ(run("svd --in " + path("control") + " --out " + path("c.csv")).code, 0);
  ASSERT_EQ(run("svd --in " + path("forced") + " --out " + path("f.csv")).code, 0);
  EXPECT_LT(tail_mean(read_csv(path("f.csv")), 8, 1), tail_mean(read_csv(path("c.csv")), 8, 1));
  EXPECT_EQ(read_csv(path("c.csv")).size(), 9u * 32);  // min(64 tokens, 32 dims) per depth

  ASSERT_EQ(run("svd --in " + path("control") + " --out " + path("i.csv") + " --level image").code, 0);
  const auto image = read_csv(path("i.csv"));
  EXPECT_EQ(image.size(), 9u * 3);
  EXPECT_EQ(image[0][4], "image");
}

TEST_F(Cli, ReprStatsAndProbe) {
  const auto cfg = config("c.json", 2, 2, 16, 16, 4);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 20 --out " + path("d")).code, 0);
  ASSERT_EQ(run("repr-stats --in " + path("d") + " --out " + path("r.csv")).code, 0);
  const auto rows = read_csv(path("r.csv"));
  EXPECT_EQ(rows.size(), 2u * 3);
  for (const auto& r : rows) {
    EXPECT_LE(std::stod(r[2]), 1.0 + 1e-9);
    EXPECT_GE(std::stod(r[2]), -1.0 - 1e-9);
  }
  ASSERT_EQ(run("probe --in " + path("d") + " --out " + path("p.csv") + " --epochs 20").code, 0);
  const auto probe = read_csv(path("p.csv"));
  ASSERT_EQ(probe.size(), 3u);
  EXPECT_EQ(probe[2][3], "20");
}

TEST_F(Cli, NoiseCurve) {
  const auto cfg = config("c.json", 1, 2, 16, 16, 4);
  ASSERT_EQ(run("noise --config " + cfg + " --synthetic 8 --rms 0.2 --out " + path("n.csv")).code, 0);
  const auto rows = read_csv(path("n.csv"));
  ASSERT_EQ(rows.size(), 10u);
  for (const auto& r : rows) {
    EXPECT_GE(std::stod(r[4]), -1.0);
    EXPECT_LE(std::stod(r[4]), 1.0);
  }
  EXPECT_EQ(run("noise --config " + cfg + " --synthetic 8 --rms 0 --out " + path("z.csv")).code, 0);
  for (const auto& r : read_csv(path("z.csv"))) EXPECT_EQ(std::stod(r[4]), 0.0);
}

TEST_F(Cli, HybridEval) {
  const auto cfg = config("c.json", 1, 2, 16, 16, 4);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 4 --out " + path("d")).code, 0);
  const std::string views =
      "hybrid-eval --view1 " + path("d/synthetic_00000.nad") + " --view2 " + path("d/synthetic_00002.nad") +
      " --negatives " + path("d");
  auto r = run(views + " --lambda 0");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["loss_hybrid"], j["loss_mim"]);
  r = run(views + " --lambda 1 --out " + path("h.json"));
  ASSERT_EQ(r.code, 0);
  j = nlohmann::json::parse(slurp(path("h.json")));
  EXPECT_EQ(j["loss_hybrid"], j["loss_contrastive"]);
  EXPECT_EQ(run(views + " --lambda 1.5").code, 2);
}

TEST_F(Cli, ReplayReproducesHashes) {
  const auto cfg = config("c.json", 2, 2, 16, 16, 4);
  ASSERT_EQ(run("dump --config " + cfg + " --synthetic 3 --out " + path("d")).code, 0);
  ASSERT_EQ(run("attn-stats --in " + path("d") + " --out " + path("a.csv")).code, 0);
  const auto r = run("replay --manifest " + path("a.manifest.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("ok "), std::string::npos);
  EXPECT_EQ(r.out.find("MISMATCH"), std::string::npos);
  EXPECT_EQ(run("replay --manifest " + path("d/manifest.json")).code, 0);
}
