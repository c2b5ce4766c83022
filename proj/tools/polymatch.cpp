// polymatch: build, query and inspect polygon indexes from the command line.
//
// Exit codes: 0 success, 2 input error, 3 schema mismatch, 4 query/index
// incompatibility, 5 domain error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polymatch/generate.hpp"
#include "polymatch/io.hpp"
#include "polymatch/polymatch.hpp"

namespace {

using namespace polymatch;
using io::json;

enum Exit : int { kOk = 0, kInput = 2, kSchema = 3, kIncompatible = 4, kDomain = 5 };

struct Failure {
  int code;
  std::string message;
};

// "-" is a standard stream.
class InputFile {
 public:
  explicit InputFile(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw Failure{kInput, "cannot open '" + path + "' for reading"};
  }
  std::istream& stream() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Failure{kInput, "cannot open '" + path + "' for writing"};
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<Polygon> read_records(const std::string& path) {
  InputFile in(path);
  return io::read_polygons_jsonl(in.stream());
}

PolygonIndex load(const std::string& path) {
  InputFile in(path);
  return io::load_index(in.stream());
}

Complex pair_to_complex(const std::vector<double>& v, const char* name) {
  if (v.size() != 2) throw Failure{kInput, std::string("--") + name + " expects re,im"};
  return {v[0], v[1]};
}

void print_stats(const std::string& query_id, std::size_t candidates, std::size_t verified, const ProbeStats& s) {
  io::write_json(std::cerr, json{{"query_id", query_id},
                                 {"candidates", candidates},
                                 {"verified", verified},
                                 {"bucket_probes", s.bucket_probes},
                                 {"kd_nodes", s.kd_nodes},
                                 {"points_tested", s.points_tested}});
  std::cerr << '\n';
}

void check_query_n(const PolygonIndex& index, const Polygon& q) {
  if (q.size() != static_cast<std::size_t>(index.n())) {
    throw Failure{kIncompatible, "query '" + q.id + "' has " + std::to_string(q.size()) +
                                     " vertices but the index has n=" + std::to_string(index.n())};
  }
}

// n = 0 accepts any common vertex count.
int cmd_build(const std::string& input, const std::string& output, std::size_t n, const std::vector<int>& js,
              double cell) {
  std::vector<Polygon> polys = read_records(input);
  if (polys.empty()) throw Failure{kInput, "no polygon records in '" + input + "'"};
  if (n) {
    for (const Polygon& p : polys) {
      if (p.size() != n) {
        throw Failure{kSchema, "polygon '" + p.id + "' has " + std::to_string(p.size()) + " vertices, expected " +
                                   std::to_string(n)};
      }
    }
  }
  const PolygonIndex index = PolygonIndex::build(std::move(polys), js, cell);
  {
    OutputFile out(output);
    io::save_index(out.stream(), index);
  }
  json occupancy = json::array();
  for (std::size_t slot = 0; slot < index.j_set().size(); ++slot) {
    json hist = json::object();
    for (const auto& [bucket_size, buckets] : index.occupancy(slot)) hist[std::to_string(bucket_size)] = buckets;
    occupancy.push_back({{"j", index.j_set()[slot]}, {"histogram", hist}});
  }
  io::write_json(std::cout, json{{"m", index.size()},
                                 {"n", index.n()},
                                 {"j_set", index.j_set()},
                                 {"cell", index.cell()},
                                 {"occupancy", occupancy}});
  std::cout << '\n';
  return kOk;
}

int cmd_query_sim(const std::string& index_path, const std::string& query, double tol, const std::vector<int>& js,
                  bool stats) {
  const PolygonIndex index = load(index_path);
  const std::vector<Polygon> queries = read_records(query);
  for (const Polygon& q : queries) check_query_n(index, q);
  for (int j : js) {
    if (std::find(index.j_set().begin(), index.j_set().end(), j) == index.j_set().end()) {
      throw Failure{kIncompatible, "j = " + std::to_string(j) + " is not indexed"};
    }
  }
  for (const Polygon& q : queries) {
    const CandidateSet c = js.size() >= 2  ? index.multi_signature_filter(q, js, tol)
                           : js.size() == 1 ? index.query_similarity(q, js.front(), tol)
                                            : index.query_similarity(q, tol);
    for (const MatchResult& r : c.verified) {
      io::write_json(std::cout, io::match_json(q.id, r));
      std::cout << '\n';
    }
    if (stats) print_stats(q.id, c.ids.size(), c.verified.size(), c.stats);
  }
  return kOk;
}

int cmd_query_affine(const std::string& index_path, const std::string& query, double tol, const AffineMap& f,
                     bool stats) {
  if (!f.is_valid()) throw Failure{kDomain, "the given affine map is singular"};
  const PolygonIndex index = load(index_path);
  const std::vector<Polygon> queries = read_records(query);
  for (const Polygon& q : queries) check_query_n(index, q);
  for (const Polygon& q : queries) {
    const CandidateSet c = index.query_known_affine(q, f, tol);
    for (const MatchResult& r : c.verified) {
      io::write_json(std::cout, io::match_json(q.id, r));
      std::cout << '\n';
    }
    if (stats) print_stats(q.id, c.ids.size(), c.verified.size(), c.stats);
  }
  return kOk;
}

int cmd_query_pair(const std::string& index_path, const std::string& query, const std::string& query2, double tol,
                   bool stats) {
  const PolygonIndex index = load(index_path);
  const std::vector<Polygon> first = read_records(query);
  const std::vector<Polygon> second = read_records(query2);
  if (first.size() != second.size()) {
    throw Failure{kInput, "--query and --query2 hold " + std::to_string(first.size()) + " and " +
                              std::to_string(second.size()) + " records"};
  }
  for (const Polygon& q : first) check_query_n(index, q);
  for (const Polygon& q : second) check_query_n(index, q);
  for (std::size_t k = 0; k < first.size(); ++k) {
    const PairCandidateSet c = index.query_pair(first[k], second[k], tol);
    for (const PairMatch& r : c.verified) {
      io::write_json(std::cout, io::pair_match_json(first[k].id, second[k].id, r));
      std::cout << '\n';
    }
    if (stats) print_stats(first[k].id, c.pairs.size(), c.verified.size(), c.stats);
  }
  return kOk;
}

int cmd_gen(std::size_t count, std::size_t n, std::uint64_t seed, const std::vector<std::string>& plant_specs,
            const std::string& output, const std::string& truth_path) {
  std::vector<gen::PlantSpec> plants;
  try {
    for (const std::string& s : plant_specs) plants.push_back(gen::parse_plant(s));
  } catch (const Error& e) {
    throw Failure{kInput, e.what()};
  }
  if (count < 1) throw Failure{kInput, "--count must be at least 1"};
  if (n < 3) throw Failure{kInput, "--n must be at least 3"};
  const gen::Dataset data = gen::generate(count, n, seed, plants);
  {
    OutputFile out(output);
    io::write_polygons_jsonl(out.stream(), data.polygons);
  }
  if (!truth_path.empty()) {
    OutputFile truth(truth_path);
    for (const gen::PlantTruth& t : data.truth) {
      io::write_json(truth.stream(), json{{"id", t.id},
                                          {"source", t.source_id},
                                          {"kind", gen::to_string(t.kind)},
                                          {"shift", t.shift},
                                          {"transform", io::transform_json(t.transform)},
                                          {"r", t.noise_radius}});
      truth.stream() << '\n';
    }
  }
  return kOk;
}

json ellipse_json(const Ellipse& e) {
  return {{"center", io::complex_json(e.center)},
          {"major_axis_length", e.major_axis_length},
          {"minor_axis_length", e.minor_axis_length},
          {"angle", e.angle}};
}

int cmd_noise_bound(const std::vector<double>& coords, double r, int samples) {
  if (coords.size() != 6) throw Failure{kInput, "--triangle expects x1,y1,x2,y2,x3,y3"};
  const Complex z1{coords[0], coords[1]};
  const Complex z2{coords[2], coords[3]};
  const Complex z3{coords[4], coords[5]};
  check_triangle(z1, z2, z3);
  check_noise_radius(r);
  const NoiseCoefficients c = triangle_noise_coefficients(z1, z2, z3);
  json report{{"triangle", json::array({io::complex_json(z1), io::complex_json(z2), io::complex_json(z3)})},
              {"r", r},
              {"samples", samples},
              {"near_radius_limit", near_noise_limit(r)}};
  // Applies when the triangle is directly similar to the equilateral one.
  if (chordal_distance(tau(z1, z2, z3), RiemannPoint(-kLambda3 * kLambda3)) <= 1e-9) {
    report["equilateral_bound"] = equilateral_bound(r);
  }
  report["coefficients"] = {{"a", c.a}, {"phi1", c.phi1}, {"b", c.b}, {"phi2", c.phi2}};
  json ellipses = json::array();
  for (const Ellipse& e : vertex_ellipses(z1, z2, z3, r)) ellipses.push_back(ellipse_json(e));
  report["vertex_ellipses"] = ellipses;
  const NoiseRegion region = noise_region(z1, z2, z3, r, samples);
  report["tau_ellipse"] = ellipse_json(region.tau_ellipse);
  report["phi_disk"] = {{"center", io::complex_json(region.phi_bound_disk.center)},
                        {"radius", region.phi_bound_disk.radius}};
  io::write_json(std::cout, report);
  std::cout << '\n';
  return kOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MixedSizes:
    case ErrorCode::IntegrityFailure: return kSchema;
    case ErrorCode::SizeMismatch: return kIncompatible;
    case ErrorCode::DegenerateTriangle:
    case ErrorCode::NegativeOrientation:
    case ErrorCode::ROutOfRange:
    case ErrorCode::UnboundedImage:
    case ErrorCode::CoincidentBase:
    case ErrorCode::InvalidAffine: return kDomain;
    default: return kInput;
  }
}

template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const Failure& f) {
    std::cerr << "polymatch: " << f.message << '\n';
    return f.code;
  } catch (const io::InputError& e) {
    std::cerr << "polymatch: " << e.what() << '\n';
    return kInput;
  } catch (const Error& e) {
    std::cerr << "polymatch: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "polymatch: " << e.what() << '\n';
    return kInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity and affine polygon matching"};
  app.require_subcommand(1);
  int status = kOk;

  std::string input, output, index_path, query, query2, truth;
  std::vector<int> js;
  std::size_t n_value = 0;
  double cell = kDefaultCell;
  double tol = 1e-6;
  bool stats = false;

  auto* build = app.add_subcommand("build", "Index a JSONL polygon collection");
  build->add_option("--input", input, "Polygon records (JSONL, '-' for stdin)")->required();
  build->add_option("--output", output, "Index file ('-' for stdout)")->required();
  auto* n_opt = build->add_option("--n", n_value, "Required vertex count");
  build->add_option("--j", js, "Indexed j values")->delimiter(',')->default_str("1");
  build->add_option("--cell", cell, "Signature cell size")->default_val(kDefaultCell);
  build->callback([&] {
    std::vector<int> used = js.empty() ? std::vector<int>{1} : js;
    const std::size_t required = n_opt->count() ? n_value : 0;
    status = guarded([&] { return cmd_build(input, output, required, used, cell); });
  });

  auto add_query_options = [&](CLI::App* sub) {
    sub->add_option("--index", index_path, "Index file")->required();
    sub->add_option("--query", query, "Query records (JSONL, '-' for stdin)")->required();
    sub->add_option("--tol", tol, "Verification tolerance")->default_val(1e-6);
    sub->add_flag("--stats", stats, "Report candidate counts on stderr");
  };

  auto* qsim = app.add_subcommand("query-sim", "Find similar polygons");
  add_query_options(qsim);
  qsim->add_option("--j", js, "j values to filter on (two or more intersect)")->delimiter(',');
  qsim->callback([&] { status = guarded([&] { return cmd_query_sim(index_path, query, tol, js, stats); }); });

  std::vector<double> alpha, beta, gamma;
  auto* qaff = app.add_subcommand("query-affine", "Find polygons related by a known affine map");
  add_query_options(qaff);
  qaff->add_option("--alpha", alpha, "re,im")->delimiter(',')->required();
  qaff->add_option("--beta", beta, "re,im")->delimiter(',')->required();
  qaff->add_option("--gamma", gamma, "re,im")->delimiter(',')->required();
  qaff->callback([&] {
    status = guarded([&] {
      const AffineMap f{pair_to_complex(alpha, "alpha"), pair_to_complex(beta, "beta"),
                        pair_to_complex(gamma, "gamma")};
      return cmd_query_affine(index_path, query, tol, f, stats);
    });
  });

  auto* qpair = app.add_subcommand("query-pair", "Find pairs mapped by one unknown affine map");
  add_query_options(qpair);
  qpair->add_option("--query2", query2, "Second query records, paired by line")->required();
  qpair->callback([&] { status = guarded([&] { return cmd_query_pair(index_path, query, query2, tol, stats); }); });

  std::size_t count = 0;
  std::size_t gen_n = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> plants;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random collection with planted copies");
  gen_cmd->add_option("--count", count, "Number of random polygons")->required();
  gen_cmd->add_option("--n", gen_n, "Vertices per polygon")->required();
  gen_cmd->add_option("--seed", seed, "Random seed")->default_val(0);
  gen_cmd->add_option("--plant", plants, "similarity:K | affine:K | affine-noise:r=R:K (repeatable)");
  gen_cmd->add_option("--output", output, "Collection file ('-' for stdout)")->default_val("-");
  gen_cmd->add_option("--truth", truth, "Ground-truth sidecar (JSONL)");
  gen_cmd->callback([&] { status = guarded([&] { return cmd_gen(count, gen_n, seed, plants, output, truth); }); });

  std::vector<double> triangle;
  double r = 0.0;
  int samples = 256;
  auto* nb = app.add_subcommand("noise-bound", "Report noise regions for a triangle");
  nb->add_option("--triangle", triangle, "x1,y1,x2,y2,x3,y3")->delimiter(',')->required();
  nb->add_option("--r", r, "Noise radius in (0, sqrt(3)/6)")->required();
  nb->add_option("--samples", samples, "Boundary samples")->default_val(256);
  nb->callback([&] { status = guarded([&] { return cmd_noise_bound(triangle, r, samples); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }
  return status;
}
