#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "hardylab/capacity.hpp"
#include "hardylab/cone.hpp"
#include "hardylab/dimension.hpp"
#include "hardylab/domain.hpp"
#include "hardylab/error.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/whitney.hpp"
#include "suite.hpp"

namespace fs = std::filesystem;
using namespace hardylab;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 a check ran and failed, 2 bad configuration, 3 io,
// 4 precondition or hypothesis, 5 numerical failure.
int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::config: return 2;
    case ErrorCode::io: return 3;
    case ErrorCode::precondition:
    case ErrorCode::hypothesis:
    case ErrorCode::insufficient_levels:
      return 4;
    default: return 5;
  }
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Outputs are buffered and only written once the command succeeded.
class Outputs {
 public:
  void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void commit(const fs::path& dir, const std::string& command, std::uint64_t seed) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string());
    json manifest = {{"command", command}, {"seed", seed}, {"files", json::object()}};
    for (const auto& [name, content] : files_) manifest["files"][name] = sha256_hex(content);
    files_["manifest.json"] = manifest.dump(2) + "\n";
    // Stage everything first so a failed write leaves no mixed directory.
    std::vector<std::pair<fs::path, fs::path>> staged;
    for (const auto& [name, content] : files_) {
      const fs::path tmp = dir / ("." + name + ".partial");
      std::ofstream out(tmp, std::ios::binary);
      out << content;
      out.close();
      if (!out) {
        for (auto& s : staged) fs::remove(s.first, ec);
        fs::remove(tmp, ec);
        throw Error(ErrorCode::io, "cannot write " + (dir / name).string());
      }
      staged.emplace_back(tmp, dir / name);
    }
    for (auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
  }

 private:
  std::map<std::string, std::string> files_;
};

json domain_json(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && arg[first] == '{') return json::parse(arg);
  return json::parse(slurp(arg));
}

struct Common {
  std::uint64_t seed = 1;
  std::string out = "hardy-out";
};

struct HardyArgs {
  std::string domain;
  std::string hcase = "A";
  std::string form = "integral";
  int m = 1;
  int k = -1;
  double p = 2.0, p1 = -1.0, q = -1.0, s = -1.0, p0 = 0.0, lambda = 0.5;
  bool cone = false;
  int capacity_level = -1;

  void add_to(CLI::App* c) {
    c->add_option("--domain", domain, "domain JSON text or file")->required();
    c->add_option("--case", hcase, "A, B, C, D or E");
    c->add_option("--form", form, "integral or holder");
    c->add_option("--m", m, "highest derivative order")->check(CLI::Range(1, 3));
    c->add_option("--k", k, "lower order, default m-1");
    c->add_option("--p", p, "exponent of the m-th gradient")->check(CLI::PositiveNumber);
    c->add_option("--p1", p1, "exponent of the (k+1)-th gradient, default p");
    c->add_option("--q", q, "left-hand exponent, default p");
    c->add_option("--s", s, "weight exponent");
    c->add_option("--p0", p0, "local exponent in Cases B and D");
    c->add_option("--lambda", lambda, "Hölder form parameter");
    c->add_flag("--cone", cone, "restrict to u >= 0");
    c->add_option("--capacity-level", capacity_level, "unit-cube grid level for per-cube capacities");
  }

  HardyParams params(std::uint64_t seed) const {
    HardyParams prm;
    prm.hcase = parse_case(hcase);
    if (form == "integral")
      prm.form = HardyForm::integral;
    else if (form == "holder")
      prm.form = HardyForm::holder;
    else
      throw Error(ErrorCode::config, "unknown form '" + form + "'", "form");
    prm.m = m;
    prm.k = k < 0 ? m - 1 : k;
    prm.p = p;
    prm.p1 = p1 > 0.0 ? p1 : p;
    prm.q = q > 0.0 ? q : p;
    prm.s = s;
    prm.p0 = p0;
    prm.lambda = lambda;
    prm.cone = cone;
    prm.capacity_level = capacity_level;
    prm.seed = seed;
    return prm;
  }
};

std::vector<double> read_list(const std::string& path) {
  std::istringstream in(slurp(path));
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw Error(ErrorCode::config, "non-numeric entry in " + path);
  return v;
}

void print_error(const Error& e) {
  json rec = {{"error", error_code_name(e.code())}, {"message", e.what()}};
  if (!e.clause().empty()) rec["clause"] = e.clause();
  std::cerr << rec.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whitney decompositions, capacities and Hardy inequality bounds on grid domains"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "base seed for every randomized step");
  app.add_option("--out", common.out, "output directory");

  // decompose
  std::string d_domain;
  bool d_overlay = false;
  auto* dec = app.add_subcommand("decompose", "Whitney decomposition, validity report and SVG");
  dec->add_option("--domain", d_domain, "domain JSON text or file")->required();
  dec->add_flag("--overlay", d_overlay, "draw the enlarged cubes R_Q");

  // dimloc
  std::string l_domain;
  auto* dl = app.add_subcommand("dimloc", "local dimension estimates with g_s and box-count tables");
  dl->add_option("--domain", l_domain, "domain JSON text or file")->required();

  // capacity
  std::string c_flavor = "gamma", c_mask;
  int c_dim = 2, c_level = 4, c_m = 1, c_k = -1, c_axis = 0;
  double c_width = 0.25, c_p = 2.0, c_p1 = -1.0, c_a0 = -1.0;
  bool c_cone = false, c_full = false;
  auto* cap = app.add_subcommand("capacity", "Gamma or Theta capacity of a zero set on the unit cube");
  cap->add_option("--flavor", c_flavor, "gamma or theta")->check(CLI::IsMember({"gamma", "theta"}));
  cap->add_option("--dim", c_dim, "dimension")->check(CLI::Range(1, 3));
  cap->add_option("--level", c_level, "unit-cube grid level")->check(CLI::Range(1, 7));
  cap->add_option("--m", c_m)->check(CLI::Range(1, 3));
  cap->add_option("--k", c_k, "default m-1");
  cap->add_option("--p", c_p)->check(CLI::PositiveNumber);
  cap->add_option("--p1", c_p1, "default p");
  cap->add_option("--a0", c_a0, "Theta parameter, <= 0 picks the default");
  cap->add_option("--slab-axis", c_axis, "zero set: face slab along this axis");
  cap->add_option("--slab-width", c_width, "zero set: face slab width");
  cap->add_option("--mask", c_mask, "zero set from an NDGRID file (1 = zero cell)");
  cap->add_flag("--full-space", c_full, "no zero set");
  cap->add_flag("--cone", c_cone, "restrict to u >= 0");

  // bound
  HardyArgs b_args;
  std::string b_fweights;
  auto* bnd = app.add_subcommand("bound", "constructive Hardy constant with provenance and capacity map");
  b_args.add_to(bnd);
  bnd->add_option("--f-weights", b_fweights, "per-cube sequence weights (whitespace separated)");

  // direct
  HardyArgs r_args;
  std::vector<int> r_levels;
  auto* dir = app.add_subcommand("direct", "direct best-constant estimate, optionally a refinement study");
  r_args.add_to(dir);
  dir->add_option("--levels", r_levels, "refinement levels, e.g. --levels 8 9 10");

  // corollary
  HardyArgs k_args;
  std::string k_case = "i";
  auto* cor = app.add_subcommand("corollary", "hypothesis check of one corollary case");
  k_args.add_to(cor);
  cor->add_option("--corollary-case", k_case, "i .. x");

  // cone-split
  std::string s_domain, s_u;
  int s_m = 2;
  double s_p = 2.0, s_s = 0.0;
  bool s_cubes = false;
  auto* cs = app.add_subcommand("cone-split", "split u = u1 - u2 with u1, u2 >= 0");
  cs->add_option("--domain", s_domain, "domain JSON text or file")->required();
  cs->add_option("--u", s_u, "input function (NDFN)")->required();
  cs->add_option("--m", s_m)->check(CLI::Range(1, 3));
  cs->add_option("--p", s_p);
  cs->add_option("--s", s_s);
  cs->add_flag("--per-cube", s_cubes, "include the per-cube log");

  // suite
  std::vector<int> u_criteria;
  auto* st = app.add_subcommand("suite", "acceptance criteria 1-9");
  st->add_option("--criteria", u_criteria, "subset to run")->check(CLI::Range(1, 9));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  Outputs out;
  int status = 0;
  std::string command;
  try {
    if (*dec) {
      command = "decompose";
      GridDomain g = rasterize(parse_domain_spec(domain_json(d_domain)));
      WhitneyDecomposition w = decompose(g);
      WhitneyValidity v = validate(g, w);
      out.add_json("decomposition.json", {{"domain", to_json(g.spec())},
                                          {"cubes", v.cubes},
                                          {"strict", v.strict},
                                          {"resolution_limited", v.resolution_limited},
                                          {"violations", v.violations},
                                          {"max_dist_ratio", v.max_dist_ratio},
                                          {"max_neighbor_ratio", v.max_neighbor_ratio},
                                          {"neighbor_bound", v.neighbor_bound},
                                          {"cover_exact", v.cover_exact},
                                          {"enlarged_ok", v.enlarged_ok},
                                          {"ok", v.ok()}});
      if (g.dim() == 2) out.add("decomposition.svg", decomposition_svg(w, d_overlay));
      status = v.ok() ? 0 : 1;
    } else if (*dl) {
      command = "dimloc";
      GridDomain g = rasterize(parse_domain_spec(domain_json(l_domain)));
      WhitneyDecomposition w = decompose(g);
      DimensionEstimate loc = dim_loc(g, w), mc = dim_mc_loc(g, w);
      std::vector<GsResult> rows;
      for (const auto& [s, slope] : loc.slope_curve) rows.push_back(g_s(g, w, s));
      out.add_json("dimloc.json", {{"domain", to_json(g.spec())}, {"dim_loc", loc.to_json()}, {"dim_mc_loc", mc.to_json()}});
      out.add("gs_table.csv", gs_table_csv(rows));
      out.add("box_counts.csv", box_count_csv(rescaled_box_counts(g, w)));
      std::cout << "dim_loc " << loc.value << "  dim_mc_loc " << mc.value << "\n";
    } else if (*cap) {
      command = "capacity";
      ConstraintSet c;
      if (c_full) {
        c = ConstraintSet::full_space(c_dim, c_level);
        if (c_cone) c.kind = ConstraintKind::nonnegative_cone;
      } else if (!c_mask.empty()) {
        GridShape shape;
        auto mask = read_mask_file(c_mask, shape);
        if (shape.dim != c_dim || shape.level != c_level) {
          c_dim = shape.dim;
          c_level = shape.level;
        }
        c = ConstraintSet::from_mask(shape.dim, shape.level, mask, c_cone);
      } else {
        c = ConstraintSet::face_slab(c_dim, c_level, c_axis, c_width, c_cone);
      }
      const int k = c_k < 0 ? c_m - 1 : c_k;
      const double p1 = c_p1 > 0.0 ? c_p1 : c_p;
      SolverOptions so;
      so.seed = common.seed;
      CapacityResult r = c_flavor == "gamma" ? gamma_capacity(c, c_m, k, c_p, p1, so)
                                             : theta_capacity(c, c_m, k, c_p, p1, c_a0, so);
      out.add_json("capacity.json", r.to_json());
      std::cout << c_flavor << " capacity " << r.capacity << " (" << status_name(r.status) << ")\n";
    } else if (*bnd) {
      command = "bound";
      GridDomain g = rasterize(parse_domain_spec(domain_json(b_args.domain)));
      WhitneyDecomposition w = decompose(g);
      HardyParams prm = b_args.params(common.seed);
      BoundOptions bo;
      if (!b_fweights.empty()) {
        std::vector<std::int64_t> all(w.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int64_t>(i);
        LsWeightFunction f = LsWeightFunction::equidistributed(w.size(), all, prm);
        std::vector<double> v = read_list(b_fweights);
        if (v.size() != w.size())
          throw Error(ErrorCode::config, "--f-weights has " + std::to_string(v.size()) + " entries for " +
                                             std::to_string(w.size()) + " cubes", "f-weights");
        for (double x : v)
          if (!(x >= 0.0)) throw Error(ErrorCode::config, "sequence weights must be nonnegative", "f-weights");
        f.values = v;
        const double n = f.norm();
        if (!(n > 0.0)) throw Error(ErrorCode::config, "sequence weights are all zero", "f-weights");
        for (double& x : f.values) x /= n;
        bo.f = f;
      }
      HardyBoundReport b = constructive_bound(g, w, prm, bo);
      out.add_json("bound.json", b.to_json());
      out.add("provenance.csv", b.provenance_csv());
      if (g.dim() == 2) {
        const auto field = b.field.values();
        out.add("capacity_map.svg", decomposition_svg(w, false, &field));
      }
      std::cout << "constant_A " << b.constant_A << "\n";
    } else if (*dir) {
      command = "direct";
      DomainSpec spec = parse_domain_spec(domain_json(r_args.domain));
      HardyParams prm = r_args.params(common.seed);
      if (r_levels.empty()) {
        DirectEstimate e = direct_best_constant(rasterize(spec), prm);
        out.add_json("direct.json", e.to_json());
        std::cout << "direct constant " << e.constant << "\n";
      } else {
        RefinementStudy r = refine_direct(spec, prm, r_levels);
        out.add_json("refinement.json", r.to_json());
        std::cout << "extrapolated ratio " << r.extrapolated << "\n";
      }
    } else if (*cor) {
      command = "corollary";
      GridDomain g = rasterize(parse_domain_spec(domain_json(k_args.domain)));
      WhitneyDecomposition w = decompose(g);
      CorollaryReport r = corollary_check(g, w, parse_corollary_case(k_case), k_args.params(common.seed));
      out.add_json("corollary.json", r.to_json());
      std::cout << "hypotheses " << (r.hypotheses_ok ? "hold" : "fail") << "\n";
      status = r.hypotheses_ok ? 0 : 1;
    } else if (*cs) {
      command = "cone-split";
      GridDomain g = rasterize(parse_domain_spec(domain_json(s_domain)));
      GridShape shape;
      std::vector<double> u = read_function_file(s_u, shape);
      if (shape.dim != g.dim() || shape.level != g.level())
        throw Error(ErrorCode::config, "function grid does not match the domain grid", "u");
      WhitneyDecomposition w = decompose(g);
      ConeSplit r = cone_split(g, w, u, s_m, s_p, s_s);
      auto write_fn = [&](const std::string& name, const std::vector<double>& v) {
        const fs::path tmp = fs::temp_directory_path() / ("hardy-" + std::to_string(::getpid()) + "-" + name);
        write_function_file(tmp.string(), shape, v);
        out.add(name, slurp(tmp.string()));
        fs::remove(tmp);
      };
      write_fn("u1.fn", r.u1);
      write_fn("u2.fn", r.u2);
      out.add_json("cone_split.json", r.to_json(s_cubes));
      std::cout << "norm factor " << r.norm_factor << "  exactness " << r.exactness_error << "\n";
    } else if (*st) {
      command = "suite";
      suite::SuiteOptions so;
      so.seed = common.seed;
      so.criteria = u_criteria;
      so.on_result = [](const suite::CriterionResult& r) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << " " << r.name << ": " << r.summary << "\n"
                  << std::flush;
      };
      auto results = suite::run_suite(so);
      json doc = suite::reports_document(results, so.seed);
      for (const auto& r : results) {
        if (r.id == 9) doc["criteria"].push_back({{"id", 9}, {"name", r.name}, {"pass", r.pass}, {"report", r.report}});
        if (!r.pass) status = 1;
      }
      out.add_json("suite.json", doc);
    }
    out.commit(common.out, command, common.seed);
  } catch (const Error& e) {
    print_error(e);
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 5;
  }
  return status;
}
