#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "polymatch/io.hpp"

using namespace polymatch;
using io::json;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("polymatch_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the CLI; stdout and stderr land in out.txt and err.txt.
  int run(const std::string& args) {
    const std::string cmd = std::string(POLYMATCH_CLI) + " " + args + " >" + path("out.txt") + " 2>" + path("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out() const { return slurp(path("out.txt")); }
  std::string err() const { return slurp(path("err.txt")); }

  std::vector<json> out_records() const {
    std::vector<json> v;
    std::istringstream in(out());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) v.push_back(json::parse(line));
    }
    return v;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  void write_polys(const std::string& name, const std::vector<Polygon>& polys) const {
    std::ofstream os(path(name));
    io::write_polygons_jsonl(os, polys);
  }

  std::vector<Polygon> read_polys(const std::string& name) const {
    std::ifstream in(path(name));
    return io::read_polygons_jsonl(in);
  }

  fs::path dir_;
};

const char* kTriangles =
    "{\"id\":\"t1\",\"vertices\":[[0,0],[1,0],[0,1]]}\n"
    "{\"id\":\"t2\",\"vertices\":[[0,0],[2,0],[0.5,1.5]]}\n"
    "{\"id\":\"t3\",\"vertices\":[[1,1],[3,0],[2,4]]}\n";

}  // namespace

TEST_F(Cli, BuildThreeTriangles) {
  write("tri.jsonl", kTriangles);
  ASSERT_EQ(run("build --input " + path("tri.jsonl") + " --output " + path("idx.json")), 0) << err();
  const json summary = json::parse(out());
  EXPECT_EQ(summary["m"], 3);
  EXPECT_EQ(summary["n"], 3);
  EXPECT_TRUE(fs::exists(path("idx.json")));
}

TEST_F(Cli, BuildRejectsShortRecordWithLineNumber) {
  write("bad.jsonl", std::string(kTriangles) + "{\"id\":\"t4\",\"vertices\":[[0,0],[1,0]]}\n");
  EXPECT_EQ(run("build --input " + path("bad.jsonl") + " --output " + path("idx.json")), 2);
  EXPECT_NE(err().find("line 4"), std::string::npos) << err();
}

TEST_F(Cli, BuildRejectsMixedSizes) {
  write("mixed.jsonl", std::string(kTriangles) + "{\"id\":\"q\",\"vertices\":[[0,0],[1,0],[1,1],[0,1]]}\n");
  EXPECT_EQ(run("build --input " + path("mixed.jsonl") + " --output " + path("idx.json")), 3);
  write("tri.jsonl", kTriangles);
  EXPECT_EQ(run("build --input " + path("tri.jsonl") + " --output " + path("idx.json") + " --n 4"), 3);
}

TEST_F(Cli, MissingInputAndBadFlags) {
  EXPECT_EQ(run("build --input " + path("nope.jsonl") + " --output " + path("idx.json")), 2);
  EXPECT_EQ(run("build --bogus"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, QuerySizeMismatchAndMalformedQuery) {
  write("tri.jsonl", kTriangles);
  ASSERT_EQ(run("build --input " + path("tri.jsonl") + " --output " + path("idx.json")), 0);
  write("sq.jsonl", "{\"id\":\"q\",\"vertices\":[[0,0],[1,0],[1,1],[0,1]]}\n");
  EXPECT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("sq.jsonl")), 4);
  write("junk.jsonl", "{\"id\":\"q\",\"vertices\":[[0,0],[1,0],[1]]}\n");
  EXPECT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("junk.jsonl")), 2);
  write("idx_bad.json", "{\"format\":\"something-else\"}");
  EXPECT_EQ(run("query-sim --index " + path("idx_bad.json") + " --query " + path("tri.jsonl")), 2);
}

TEST_F(Cli, TamperedIndexIsSchemaFailure) {
  write("tri.jsonl", kTriangles);
  ASSERT_EQ(run("build --input " + path("tri.jsonl") + " --output " + path("idx.json")), 0);
  json j = json::parse(slurp(path("idx.json")));
  for (auto& e : j["signatures"][0]["entries"]) e[2] = e[2].get<double>() + 0.5;
  write("idx.json", io::to_string(j));
  EXPECT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("tri.jsonl")), 3);
}

TEST_F(Cli, SelfQueryHasZeroResidual) {
  write("tri.jsonl", kTriangles);
  ASSERT_EQ(run("build --input " + path("tri.jsonl") + " --output " + path("idx.json")), 0);
  write("q.jsonl", "{\"id\":\"q\",\"vertices\":[[1,1],[3,0],[2,4]]}\n");
  ASSERT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("q.jsonl") + " --stats"), 0) << err();
  const auto recs = out_records();
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["query_id"], "q");
  EXPECT_EQ(recs[0]["match_id"], "t3");
  EXPECT_EQ(recs[0]["shift"], 0);
  EXPECT_EQ(recs[0]["residual"].get<double>(), 0.0);
  const json stats = json::parse(err());
  EXPECT_EQ(stats["query_id"], "q");
  EXPECT_GE(stats["candidates"].get<int>(), 1);
  EXPECT_LE(stats["bucket_probes"].get<int>(), 9);
}

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --count 10 --n 5 --seed 3 --output " + path("a.jsonl")), 0);
  ASSERT_EQ(run("gen --count 10 --n 5 --seed 3 --output " + path("b.jsonl")), 0);
  ASSERT_EQ(run("gen --count 10 --n 5 --seed 4 --output " + path("c.jsonl")), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
  const auto polys = read_polys("a.jsonl");
  ASSERT_EQ(polys.size(), 10u);
  for (const Polygon& p : polys) {
    EXPECT_EQ(p.size(), 5u);
    for (const Complex& z : p.vertices) {
      EXPECT_GE(z.real(), 0);
      EXPECT_LT(z.real(), 1);
      EXPECT_GE(z.imag(), 0);
      EXPECT_LT(z.imag(), 1);
    }
  }
  EXPECT_EQ(run("gen --count 10 --n 5 --plant similarity:x"), 2);
  EXPECT_EQ(run("gen --count 10 --n 5 --plant affine-noise:r=0.4:2"), 2);
  EXPECT_EQ(run("gen --count 0 --n 5"), 2);
}

TEST_F(Cli, PlantedSimilarityFindsSource) {
  ASSERT_EQ(run("gen --count 400 --n 6 --seed 11 --plant similarity:5 --output " + path("all.jsonl") + " --truth " +
                path("truth.jsonl")),
            0)
      << err();
  const auto all = read_polys("all.jsonl");
  ASSERT_EQ(all.size(), 405u);
  std::vector<Polygon> base(all.begin(), all.begin() + 400), plants(all.begin() + 400, all.end());
  write_polys("base.jsonl", base);
  write_polys("plants.jsonl", plants);
  std::map<std::string, json> truth;
  std::istringstream tin(slurp(path("truth.jsonl")));
  for (std::string line; std::getline(tin, line);) {
    const json t = json::parse(line);
    truth[t["id"].get<std::string>()] = t;
  }
  ASSERT_EQ(truth.size(), 5u);
  for (const Polygon& p : plants) {
    const json& t = truth.at(p.id);
    const Polygon& src = *std::find_if(base.begin(), base.end(), [&](const Polygon& b) { return b.id == t["source"]; });
    const auto m = verify_similarity(p, src, 1e-9);
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->shift, t["shift"].get<std::size_t>());
  }
  ASSERT_EQ(run("build --input " + path("base.jsonl") + " --output " + path("idx.json") + " --j 1,2,3"), 0) << err();
  ASSERT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("plants.jsonl")), 0) << err();
  const auto recs = out_records();
  ASSERT_EQ(recs.size(), 5u);
  for (const json& r : recs) EXPECT_EQ(r["match_id"], truth.at(r["query_id"].get<std::string>())["source"]);
  const std::string first = out();
  ASSERT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("plants.jsonl")), 0);
  EXPECT_EQ(out(), first);
  ASSERT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("plants.jsonl") + " --j 1,2,3"), 0);
  EXPECT_EQ(out_records().size(), 5u);
  EXPECT_EQ(run("query-sim --index " + path("idx.json") + " --query " + path("plants.jsonl") + " --j 4"), 4);
}

TEST_F(Cli, KnownAffineQuery) {
  ASSERT_EQ(run("gen --count 200 --n 5 --seed 12 --output " + path("base.jsonl")), 0);
  ASSERT_EQ(run("build --input " + path("base.jsonl") + " --output " + path("idx.json")), 0);
  const auto base = read_polys("base.jsonl");
  const AffineMap f{{1.2, 0.3}, {0.4, -0.2}, {0.5, -1}};
  std::vector<Complex> v;
  for (const Complex& z : base[17].shifted(3).vertices) v.push_back(f(z));
  write_polys("q.jsonl", {Polygon("q", v)});
  ASSERT_EQ(run("query-affine --index " + path("idx.json") + " --query " + path("q.jsonl") +
                " --alpha 1.2,0.3 --beta 0.4,-0.2 --gamma 0.5,-1"),
            0)
      << err();
  const auto recs = out_records();
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0]["match_id"], base[17].id);
  EXPECT_EQ(recs[0]["shift"], 3);
  EXPECT_EQ(run("query-affine --index " + path("idx.json") + " --query " + path("q.jsonl") +
                " --alpha 1,0 --beta 1,0 --gamma 0,0"),
            5);
}

TEST_F(Cli, PairQueryFindsPlantedPair) {
  ASSERT_EQ(run("gen --count 150 --n 4 --seed 13 --output " + path("base.jsonl")), 0);
  ASSERT_EQ(run("build --input " + path("base.jsonl") + " --output " + path("idx.json")), 0);
  const auto base = read_polys("base.jsonl");
  const AffineMap f{{0.8, -0.6}, {0.3, 0.1}, {2, 1}};
  std::vector<Complex> a, b;
  for (const Complex& z : base[5].shifted(1).vertices) a.push_back(f(z));
  for (const Complex& z : base[90].shifted(2).vertices) b.push_back(f(z));
  write_polys("q1.jsonl", {Polygon("w", a)});
  write_polys("q2.jsonl", {Polygon("w2", b)});
  ASSERT_EQ(run("query-pair --index " + path("idx.json") + " --query " + path("q1.jsonl") + " --query2 " +
                path("q2.jsonl") + " --tol 1e-6"),
            0)
      << err();
  const auto recs = out_records();
  ASSERT_GE(recs.size(), 1u);
  bool found = false;
  for (const json& r : recs) {
    if (r["match_ids"] == json::array({base[5].id, base[90].id})) {
      found = true;
      EXPECT_EQ(r["shifts"], json::array({1, 2}));
    }
  }
  EXPECT_TRUE(found) << out();
  write_polys("q3.jsonl", {Polygon("w2", b), Polygon("w3", b)});
  EXPECT_EQ(run("query-pair --index " + path("idx.json") + " --query " + path("q1.jsonl") + " --query2 " +
                path("q3.jsonl")),
            2);
}

TEST_F(Cli, AffineNoisePlantsStayInVertexEllipses) {
  ASSERT_EQ(run("gen --count 50 --n 3 --seed 14 --plant affine-noise:r=0.01:10 --output " + path("all.jsonl") +
                " --truth " + path("truth.jsonl")),
            0)
      << err();
  const auto all = read_polys("all.jsonl");
  std::map<std::string, Polygon> by_id;
  for (const Polygon& p : all) by_id.emplace(p.id, p);
  std::istringstream tin(slurp(path("truth.jsonl")));
  int seen = 0;
  for (std::string line; std::getline(tin, line);) {
    const json t = json::parse(line);
    ++seen;
    EXPECT_EQ(t["r"].get<double>(), 0.01);
    const auto& tr = t["transform"];
    const AffineMap f{io::complex_from(tr["alpha"]), io::complex_from(tr["beta"]), io::complex_from(tr["gamma"])};
    const Polygon clean = by_id.at(t["source"]).shifted(t["shift"].get<std::size_t>());
    Complex c[3];
    for (int k = 0; k < 3; ++k) c[k] = f(clean[k]);
    if (orientation(c[0], c[1], c[2]) != Orientation::Positive) std::swap(c[1], c[2]);
    const Polygon& noisy = by_id.at(t["id"]);
    std::array<Complex, 3> v{noisy[0], noisy[1], noisy[2]};
    if (c[1] != f(clean[1])) std::swap(v[1], v[2]);
    const auto es = vertex_ellipses(c[0], c[1], c[2], 0.01);
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(es[k].contains(v[k], 1e-12)) << t.dump();
  }
  EXPECT_EQ(seen, 10);
}

TEST_F(Cli, NoiseBoundReports) {
  const double s = std::sqrt(3.0) / 2;
  const std::string eq = "-0.5," + std::to_string(s) + ",-0.5," + std::to_string(-s) + ",1,0";
  std::ostringstream tri;
  tri.precision(17);
  tri << "-0.5," << s << ",-0.5," << -s << ",1,0";
  ASSERT_EQ(run("noise-bound --triangle " + tri.str() + " --r 0.05"), 0) << err();
  const json rep = json::parse(out());
  const double bound = equilateral_bound(0.05);
  EXPECT_NEAR(rep["equilateral_bound"].get<double>(), bound, 1e-15);
  EXPECT_LE(std::abs(rep["phi_disk"]["radius"].get<double>() - bound), 0.05 * bound);
  EXPECT_EQ(rep["near_radius_limit"], false);
  ASSERT_EQ(run("noise-bound --triangle " + tri.str() + " --r 0.286"), 0) << err();
  EXPECT_EQ(json::parse(out())["near_radius_limit"], true);

  ASSERT_EQ(run("noise-bound --triangle 0,0,1,0,0,1 --r 0.01"), 0) << err();
  const json right = json::parse(out());
  EXPECT_FALSE(right.contains("equilateral_bound"));
  EXPECT_GT(right["tau_ellipse"]["minor_axis_length"].get<double>(), 0);
  EXPECT_GT(right["tau_ellipse"]["major_axis_length"].get<double>(), 0);
  const Ellipse e = tau_region(0, 1, Complex(0, 1), 0.01);
  EXPECT_EQ(right["tau_ellipse"]["major_axis_length"].get<double>(), e.major_axis_length);
  EXPECT_TRUE(e.contains(tau(0, 1, Complex(0, 1)).value()));
  EXPECT_EQ(right["vertex_ellipses"].size(), 3u);

  EXPECT_EQ(run("noise-bound --triangle " + eq + " --r 0.5"), 5);
  EXPECT_EQ(run("noise-bound --triangle 0,0,0,1,1,0 --r 0.01"), 5);
  EXPECT_EQ(run("noise-bound --triangle 0,0,1,1,2,2 --r 0.01"), 5);
  EXPECT_EQ(run("noise-bound --triangle 0,0,1,1 --r 0.01"), 2);
}
