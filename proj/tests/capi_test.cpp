#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "s2g/s2g.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / (std::string("s2g_capi_") +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name() + "_" +
                                        std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Cfg {
  s2g_config* h = nullptr;
  Cfg() { s2g_config_new(&h); }
  ~Cfg() { s2g_config_free(h); }
  Cfg& set(const char* k, const char* v) {
    EXPECT_EQ(s2g_config_set(h, k, v), S2G_OK) << k;
    return *this;
  }
};

struct Rep {
  s2g_report* h = nullptr;
  ~Rep() { s2g_report_free(h); }
  double value(const char* name) const {
    double v = -1;
    EXPECT_EQ(s2g_report_value(h, name, &v), S2G_OK) << name;
    return v;
  }
  std::string text() const { return s2g_report_text(h); }
};

void tiny_train_settings(Cfg& c) {
  c.set("grid", "3x4").set("embed", "8").set("hidden", "12").set("layers", "1");
  c.set("channels", "8").set("bottleneck", "4").set("batch", "8").set("steps", "12").set("eval_every", "6");
}

s2g_status generate_toy(const fs::path& dir) {
  Cfg g;
  g.set("task", "toy_addition").set("train_count", "64").set("id_count", "16").set("ood_count", "16");
  g.set("split_ranges", "train=1-2;id=1-2;ood=3");
  Rep r;
  return s2g_generate(g.h, dir.c_str(), 0, &r.h);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(S2G_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(s2g_status_name(S2G_OK), "ok");
  EXPECT_STREQ(s2g_status_name(S2G_ERR_NUMERIC), "numeric failure");
  EXPECT_EQ(static_cast<int>(S2G_ERR_USAGE), 1);
  EXPECT_EQ(static_cast<int>(S2G_ERR_DATA), 2);
  EXPECT_EQ(static_cast<int>(S2G_ERR_NUMERIC), 3);
  EXPECT_STRNE(s2g_version(), "");
}

TEST(CApi, ConfigSetGetLoad) {
  TempDir tmp;
  Cfg c;
  EXPECT_EQ(s2g_config_get(c.h, "steps"), nullptr);
  c.set("steps", "5").set("steps", "7");
  EXPECT_STREQ(s2g_config_get(c.h, "steps"), "7");
  EXPECT_EQ(s2g_config_set(c.h, "", "1"), S2G_ERR_USAGE);
  EXPECT_EQ(s2g_config_set(nullptr, "a", "1"), S2G_ERR_USAGE);
  EXPECT_NE(std::string(s2g_last_error()), "");

  std::ofstream(tmp.path / "c.txt") << "# comment\n\nhidden=9\nlr=0.01\n";
  EXPECT_EQ(s2g_config_load(c.h, (tmp.path / "c.txt").c_str()), S2G_OK);
  EXPECT_STREQ(s2g_config_get(c.h, "hidden"), "9");
  std::ofstream(tmp.path / "bad.txt") << "hidden\n";
  EXPECT_EQ(s2g_config_load(c.h, (tmp.path / "bad.txt").c_str()), S2G_ERR_USAGE);
  EXPECT_NE(std::string(s2g_last_error()).find("bad.txt:1"), std::string::npos);
  EXPECT_EQ(s2g_config_load(c.h, (tmp.path / "missing.txt").c_str()), S2G_ERR_DATA);
}

TEST(CApi, GenerateRefusesToOverwrite) {
  TempDir tmp;
  const auto dir = tmp.path / "data";
  ASSERT_EQ(generate_toy(dir), S2G_OK);
  EXPECT_TRUE(fs::exists(dir / "train.tsv"));
  EXPECT_TRUE(fs::exists(dir / "dataset.meta"));
  EXPECT_EQ(generate_toy(dir), S2G_ERR_DATA);
  Cfg g;
  g.set("task", "toy_addition").set("bogus", "1");
  Rep r;
  EXPECT_EQ(s2g_generate(g.h, (tmp.path / "x").c_str(), 0, &r.h), S2G_ERR_USAGE);
  Cfg bad;
  bad.set("task", "toy_addition").set("split_ranges", "train=1-3;id=1-3;ood=2-4");
  Rep r2;
  EXPECT_EQ(s2g_generate(bad.h, (tmp.path / "y").c_str(), 0, &r2.h), S2G_ERR_USAGE);
}

TEST(CApi, TrainEvalVisualizePredict) {
  TempDir tmp;
  const auto data = tmp.path / "data", run = tmp.path / "run";
  ASSERT_EQ(generate_toy(data), S2G_OK);
  Cfg c;
  tiny_train_settings(c);
  Rep tr;
  ASSERT_EQ(s2g_train(c.h, data.c_str(), run.c_str(), 0, &tr.h), S2G_OK) << s2g_last_error();
  EXPECT_EQ(tr.value("steps"), 12.0);
  const double id = tr.value("id_accuracy");
  EXPECT_GE(id, 0.0);
  EXPECT_LE(id, 1.0);
  EXPECT_TRUE(fs::exists(run / "checkpoint.s2g"));
  EXPECT_TRUE(fs::exists(run / "metrics.tsv"));
  Rep again;
  EXPECT_EQ(s2g_train(c.h, data.c_str(), run.c_str(), 0, &again.h), S2G_ERR_DATA);

  const auto ckpt = run / "checkpoint.s2g";
  Rep ev;
  ASSERT_EQ(s2g_eval(ckpt.c_str(), data.c_str(), (tmp.path / "eval.txt").c_str(), &ev.h), S2G_OK);
  EXPECT_EQ(ev.value("id_accuracy"), id);
  EXPECT_TRUE(fs::exists(tmp.path / "eval.txt"));
  double unused;
  EXPECT_EQ(s2g_report_value(ev.h, "no_such_value", &unused), S2G_ERR_USAGE);

  Rep vis;
  const auto prefix = (tmp.path / "g").string();
  ASSERT_EQ(s2g_visualize(ckpt.c_str(), "12+34", prefix.c_str(), &vis.h), S2G_OK) << s2g_last_error();
  EXPECT_TRUE(fs::exists(prefix + ".txt"));
  EXPECT_TRUE(fs::exists(prefix + ".grid"));
  std::ifstream ppm(prefix + ".ppm", std::ios::binary);
  std::string magic;
  ppm >> magic;
  EXPECT_EQ(magic, "P6");
  Rep bad;
  EXPECT_EQ(s2g_visualize(ckpt.c_str(), "12?34", nullptr, &bad.h), S2G_ERR_DATA);

  s2g_session* s = nullptr;
  ASSERT_EQ(s2g_session_load(ckpt.c_str(), &s), S2G_OK);
  EXPECT_EQ(s2g_session_step(s), 12u);
  Rep p;
  ASSERT_EQ(s2g_session_predict(s, "5+9", &p.h), S2G_OK);
  EXPECT_NE(p.text().find('$'), std::string::npos) << p.text();
  s2g_session_free(s);

  EXPECT_EQ(s2g_session_load((tmp.path / "nope.s2g").c_str(), &s), S2G_ERR_DATA);
}

TEST(CApi, ResumeRequiresSameArchitecture) {
  TempDir tmp;
  const auto data = tmp.path / "data", run = tmp.path / "run";
  ASSERT_EQ(generate_toy(data), S2G_OK);
  Cfg c;
  tiny_train_settings(c);
  Rep a;
  ASSERT_EQ(s2g_train(c.h, data.c_str(), run.c_str(), 0, &a.h), S2G_OK);
  c.set("steps", "16").set("resume", "1");
  Rep b;
  ASSERT_EQ(s2g_train(c.h, data.c_str(), run.c_str(), 0, &b.h), S2G_OK) << s2g_last_error();
  EXPECT_EQ(b.value("steps"), 16.0);
  c.set("hidden", "10");
  Rep d;
  EXPECT_EQ(s2g_train(c.h, data.c_str(), run.c_str(), 0, &d.h), S2G_ERR_USAGE);
}

TEST(CApi, MultiSeedReport) {
  TempDir tmp;
  const auto data = tmp.path / "data";
  ASSERT_EQ(generate_toy(data), S2G_OK);
  Cfg c;
  tiny_train_settings(c);
  c.set("steps", "4").set("seeds", "2");
  Rep r;
  ASSERT_EQ(s2g_train(c.h, data.c_str(), (tmp.path / "runs").c_str(), 0, &r.h), S2G_OK) << s2g_last_error();
  EXPECT_EQ(r.value("runs"), 2.0);
  EXPECT_GE(r.value("id_best"), r.value("id_mean"));
  EXPECT_TRUE(fs::exists(tmp.path / "runs" / "summary.txt"));
}

TEST(CApi, GradcheckStatus) {
  Cfg ok;
  ok.set("instances", "5").set("only", "matmul,softmax");
  Rep r;
  EXPECT_EQ(s2g_gradcheck(ok.h, &r.h), S2G_OK);
  EXPECT_EQ(r.value("failed"), 0.0);
  EXPECT_EQ(r.value("cases"), 2.0);
  Cfg bad;
  bad.set("instances", "5").set("only", "matmul,faulty_square").set("faulty", "1");
  Rep f;
  EXPECT_EQ(s2g_gradcheck(bad.h, &f.h), S2G_ERR_NUMERIC);
  EXPECT_EQ(f.value("failed"), 1.0);
  EXPECT_NE(f.text().find("faulty_square"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  const std::string d = (tmp.path / "d").string(), r = (tmp.path / "r").string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("generate --task toy_addition"), 1);  // --out missing
  EXPECT_EQ(run_cli("generate --task nope --out " + d), 1);
  EXPECT_EQ(run_cli("generate --task toy_addition --split-ranges 'train=1-2;id=1-2;ood=3' --train-count 64 "
                    "--id-count 16 --ood-count 16 --out " + d),
            0);
  EXPECT_EQ(run_cli("generate --task toy_addition --out " + d), 2);
  EXPECT_EQ(run_cli("generate --task toy_addition --split-ranges 'train=1-2;id=1-2;ood=3' --train-count 64 "
                    "--id-count 16 --ood-count 16 --force --out " + d),
            0);
  const std::string small = " --grid 3x4 --hidden 12 --layers 1 --batch 8 --set embed=8 --set channels=8 "
                            "--set bottleneck=4 ";
  EXPECT_EQ(run_cli("train --data " + d + " --out " + r + small + "--steps -1"), 1);
  EXPECT_EQ(run_cli("train --data " + d + " --out " + r + small + "--task addsub --steps 2"), 1);
  EXPECT_EQ(run_cli("train --data " + d + " --out " + r + small + "--steps 3"), 0);
  EXPECT_TRUE(fs::exists(tmp.path / "r" / "checkpoint.s2g"));
  EXPECT_EQ(run_cli("train --data " + d + " --out " + r + small + "--steps 3"), 2);
  EXPECT_EQ(run_cli("train --data " + d + " --out " + r + small + "--steps 3 --force"), 0);
  EXPECT_EQ(run_cli("eval --checkpoint " + r + "/checkpoint.s2g --data " + d), 0);
  EXPECT_TRUE(fs::exists(tmp.path / "r" / "eval_report.txt"));
  EXPECT_EQ(run_cli("eval --checkpoint " + r + "/missing.s2g --data " + d), 2);
  EXPECT_EQ(run_cli("visualize --checkpoint " + r + "/checkpoint.s2g --input '1+2' --out " + r + "/v"), 0);
  EXPECT_EQ(run_cli("visualize --checkpoint " + r + "/checkpoint.s2g --input '1x2'"), 2);
  EXPECT_EQ(run_cli("gradcheck --instances 3 --only relu"), 0);
  EXPECT_EQ(run_cli("gradcheck --instances 3 --only faulty_square --faulty"), 3);
  EXPECT_EQ(run_cli("train --data " + (tmp.path / "none").string() + " --out " + r + "2"), 2);
}
