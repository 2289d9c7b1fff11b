#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(LGEN_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path workdir(const std::string& name) {
  const fs::path d = fs::path(LGEN_WORK_DIR) / "cli_tests" / (name + "." + std::to_string(getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Small synthetic set generated through the CLI itself.
const fs::path& synth_dir() {
  static const fs::path dir = [] {
    const fs::path d = workdir("synth");
    write(d / "small.json",
          R"({"synth": {"train_sentences": 60, "dev_sentences": 10, "test_sentences": 10}})");
    run("synth -c " + (d / "small.json").string() + " -o " + (d / "out").string());
    return d / "out";
  }();
  return dir;
}

std::string spec(const std::string& id, const std::string& split) {
  const std::string stem = (synth_dir() / (id + "." + split)).string();
  return id + ":" + stem + ".conllu:" + stem + ".vemb:" + stem + ".tok";
}

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("train --mode joint").code, 1);
  EXPECT_EQ(run("select-sources").code, 1);
  const fs::path d = workdir("usage");
  write(d / "bad.json", R"({"train": {"learing_rate": 0.1}})");
  EXPECT_EQ(run("train -c " + (d / "bad.json").string()).code, 1);
}

TEST(Cli, DataErrorsExitWithTwo) {
  EXPECT_EQ(run("select-sources --target x:/nonexistent/x.conllu --candidate y:/nonexistent/y.conllu").code, 2);
  const fs::path d = workdir("data");
  write(d / "broken.conllu", "1\tword\t_\tNOUN\t_\t_\t7\tnsubj\t_\t_\n\n");
  EXPECT_EQ(run("select-sources --target x:" + (d / "broken.conllu").string() + " --candidate " + spec("B", "train")).code, 2);
}

TEST(Cli, GradcheckPasses) {
  const CliRun r = run("gradcheck --fixtures 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("dep_loss"), std::string::npos);
}

TEST(Cli, SynthWritesEveryFile) {
  const fs::path& d = synth_dir();
  for (const char* v : {"A", "B", "C"})
    for (const char* s : {"train", "dev", "test"})
      for (const char* ext : {".conllu", ".vemb", ".tok"})
        EXPECT_TRUE(fs::exists(d / (std::string(v) + "." + s + ext))) << v << s << ext;
  EXPECT_TRUE(fs::exists(d / "manifest.txt"));
  EXPECT_TRUE(fs::exists(d / "synth.config.json"));
}

TEST(Cli, SingleCandidateIsSelectedByBothCriteria) {
  const CliRun r = run("select-sources --target " + spec("A", "train") + " --candidate " + spec("C", "train"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("pair\tC\tC\n"), std::string::npos) << r.out;
  const CliRun both = run("select-sources --target " + spec("A", "train") + " --candidate " + spec("C", "train") +
                       " --candidate " + spec("B", "train"));
  EXPECT_NE(both.out.find("pair\tB\tB\n"), std::string::npos) << both.out;
}

TEST(Cli, TrainThenEvaluateFromCheckpoint) {
  const fs::path d = workdir("train");
  const std::string sources = " --source " + spec("A", "train") + " --source " + spec("B", "train");
  const CliRun t = run("train" + sources + " --dev " + spec("A", "dev") + " --max-steps 10 --eval-every 5 -o " +
                    (d / "run").string());
  ASSERT_EQ(t.code, 0);
  EXPECT_TRUE(fs::exists(d / "run" / "trace.tsv"));
  ASSERT_TRUE(fs::exists(d / "run" / "model.ckpt"));
  const CliRun e = run("evaluate --checkpoint " + (d / "run" / "model.ckpt").string() + " --eval " + spec("C", "test"));
  EXPECT_EQ(e.code, 0);
  EXPECT_NE(e.out.find("C\t"), std::string::npos) << e.out;
  write(d / "junk.ckpt", "VCKPnot really");
  EXPECT_EQ(run("evaluate --checkpoint " + (d / "junk.ckpt").string() + " --eval " + spec("C", "test")).code, 2);
}
