#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "circle_forms/circle_forms.hpp"

using json = nlohmann::ordered_json;
namespace cf = circle_forms;

namespace {

constexpr const char* schema = "circle-forms/1";

// bad input caught before any computation starts
struct usage_error : std::runtime_error {
  std::string code;
  usage_error(std::string c, const std::string& m) : std::runtime_error(m), code(std::move(c)) {}
};

void usage_check(bool ok, const std::string& msg, const std::string& code = "InvalidArgument") {
  if (!ok) throw usage_error(code, msg);
}

cf::QuadraticForm load_form(const std::string& path) {
  std::ifstream in(path);
  usage_check(in.good(), "cannot open form file " + path, "FormFile");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw usage_error("FormFile", std::string("form file is not valid JSON: ") + e.what());
  }
  usage_check(j.is_object() && j.contains("hessian") && j["hessian"].is_array(), "form file needs a \"hessian\" array",
              "FormFile");
  std::vector<std::vector<cf::i64>> rows;
  for (const auto& row : j["hessian"]) {
    usage_check(row.is_array(), "hessian rows must be arrays", "FormFile");
    rows.emplace_back();
    for (const auto& v : row) {
      usage_check(v.is_number_integer(), "hessian entries must be integers", "FormFile");
      rows.back().push_back(v.get<cf::i64>());
    }
  }
  usage_check(!rows.empty(), "hessian is empty", "FormFile");
  for (const auto& r : rows) usage_check(r.size() == rows.size(), "hessian must be square", "DimensionMismatch");
  try {
    return cf::QuadraticForm(rows);
  } catch (const cf::error& e) {
    throw usage_error(std::string(e.name()), e.what());
  }
}

cf::BumpProfile make_bump(std::size_t n, const std::string& text) {
  double U = 1, plateau = 0;
  char comma = 0;
  std::istringstream ss(text);
  ss >> U;
  if (ss >> comma) {
    usage_check(comma == ',', "bump must be given as U,plateau", "BadPlateau");
    ss >> plateau;
  }
  usage_check(!ss.fail() && ss.eof(), "bump must be given as U,plateau", "BadPlateau");
  try {
    return cf::BumpProfile(n, U, plateau);
  } catch (const cf::error& e) {
    throw usage_error(std::string(e.name()), e.what());
  }
}

std::vector<cf::i64> parse_ivec(const std::string& s) {
  std::vector<cf::i64> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      usage_check(used == tok.size(), "not an integer: " + tok);
    } catch (const std::logic_error&) {
      throw usage_error("InvalidArgument", "not an integer: " + tok);
    }
  }
  return out;
}

json complex_json(cf::cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

// JSON has no infinity; the infinite cutoff is spelled as a string
json real_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

json envelope(const std::string& command) { return {{"schema", schema}, {"command", command}}; }

void emit(const json& j) { std::cout << j.dump() << "\n"; }

int report_error(const std::string& kind, const std::string& code, const std::string& msg, int exit_code) {
  json j{{"schema", schema}, {"error", {{"kind", kind}, {"code", code}, {"message", msg}}}};
  emit(j);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"circle-forms: representation numbers of integral quadratic forms by the circle method"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_help_all_flag("--help-all");
  long seed = 0;
  app.add_option("--seed", seed, "seed echoed into the output; all computations are deterministic");

  std::string form_path, bump_spec = "1,0", kind = "quadratic", method = "brute", r_spec, csv_path, format = "json";
  double order = 1, scale = 1, cutoff = std::numeric_limits<double>::infinity(), eps = 0.01, r_cut = 6, tol = 1e-4;
  double series_cut = cf::default_series_cutoff;
  cf::i64 n_target = 0, d = 1, q = 1, a = 0, b = 0, n_max = 0;
  int parity = 1;
  bool weighted = false;

  auto* farey = app.add_subcommand("farey", "Farey sequence and arcs of a given order");
  farey->add_option("--order", order, "order Q >= 1")->required();
  farey->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* expsum = app.add_subcommand("expsum", "complete exponential sums");
  expsum->add_option("--kind", kind, "quadratic, gauss or kappa")->check(CLI::IsMember({"quadratic", "gauss", "kappa"}));
  expsum->add_option("--form", form_path, "form JSON (gauss)");
  expsum->add_option("--d", d, "multiplier d");
  expsum->add_option("--q", q, "modulus q")->required();
  expsum->add_option("--r", r_spec, "comma separated linear vector (gauss)");
  expsum->add_option("--parity", parity, "n for the twist (d|q)^n (kappa)");
  expsum->add_option("--a", a, "a (kappa)");
  expsum->add_option("--b", b, "b (kappa)");
  expsum->add_option("--method", method, "brute or closed")->check(CLI::IsMember({"brute", "closed"}));

  auto* series = app.add_subcommand("singular-series", "truncated singular series");
  series->add_option("--form", form_path, "form JSON")->required();
  series->add_option("--n", n_target, "target n")->required();
  series->add_option("--cutoff", series_cut, "moduli q <= cutoff");

  auto* sint = app.add_subcommand("singular-integral", "singular integral J(n, C; B)");
  sint->add_option("--form", form_path, "form JSON")->required();
  sint->add_option("--n", n_target, "target n")->required();
  sint->add_option("--scale", scale, "scale C > 0")->required();
  sint->add_option("--cutoff", cutoff, "B > 0; omitted means B = infinity");
  sint->add_option("--bump", bump_spec, "U,plateau");
  sint->add_option("--tol", tol, "tolerance");

  auto* rep = app.add_subcommand("rep-count", "exact or weighted representation numbers");
  rep->add_option("--form", form_path, "form JSON")->required();
  rep->add_option("--n", n_target, "target n")->required();
  rep->add_flag("--weighted", weighted, "weight solutions by the bump at scale C");
  rep->add_option("--scale", scale, "scale C > 0");
  rep->add_option("--bump", bump_spec, "U,plateau");

  auto* verify = app.add_subcommand("verify", "exact counts against the main term for n = 1..n_max");
  verify->add_option("--form", form_path, "form JSON")->required();
  verify->add_option("--n-max", n_max, "largest n")->required();
  verify->add_option("--cutoff", series_cut, "singular series cutoff");
  verify->add_option("--eps", eps, "epsilon in the normalized error");
  verify->add_option("--csv", csv_path, "also write n,exact,main,residual,normalized_error here");

  auto* decomp = app.add_subcommand("decompose", "M + E1 + E2 + E3 split of a weighted count");
  decomp->add_option("--form", form_path, "form JSON")->required();
  decomp->add_option("--n", n_target, "target n")->required();
  decomp->add_option("--scale", scale, "scale C > 0")->required();
  decomp->add_option("--order", order, "Farey order Q >= 1");
  decomp->add_option("--r-cut", r_cut, "dual sum radius");
  decomp->add_option("--tol", tol, "tolerance");
  decomp->add_option("--bump", bump_spec, "U,plateau");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.get_name(), e.what(), 2);
  }

  bool validated = false;
  try {
    json out;
    if (farey->parsed()) {
      usage_check(order >= 1, "order must be at least 1", "OrderTooSmall");
      validated = true;
      auto arcs = cf::farey_dissection(order);
      if (format == "csv") {
        std::cout << "a,q,q_left,q_right,lo,hi\n";
        for (const auto& arc : arcs)
          std::cout << arc.center.a << ',' << arc.center.q << ',' << arc.q_left << ',' << arc.q_right << ','
                    << arc.lo.numerator() << '/' << arc.lo.denominator() << ',' << arc.hi.numerator() << '/'
                    << arc.hi.denominator() << "\n";
        return 0;
      }
      out = envelope("farey");
      out["order"] = order;
      out["count"] = arcs.size();
      json fr = json::array();
      for (const auto& arc : arcs) {
        auto rat = [](cf::rational r) { return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator()); };
        fr.push_back({{"a", arc.center.a}, {"q", arc.center.q}, {"q_left", arc.q_left}, {"q_right", arc.q_right},
                      {"lo", rat(arc.lo)}, {"hi", rat(arc.hi)}});
      }
      out["fractions"] = fr;
    } else if (expsum->parsed()) {
      usage_check(q >= 1, "modulus must be positive");
      auto how = method == "closed" ? cf::sum_method::closed_form : cf::sum_method::brute_force;
      cf::ExpSumResult res;
      out = envelope("expsum");
      out["kind"] = kind;
      if (kind == "quadratic") {
        validated = true;
        res = cf::quadratic_gauss_sum(d, q, how);
      } else if (kind == "gauss") {
        usage_check(!form_path.empty(), "--form is required for gauss sums", "MissingOption");
        auto f = load_form(form_path);
        auto r = r_spec.empty() ? cf::ivec(f.n_vars(), 0) : parse_ivec(r_spec);
        usage_check(r.size() == f.n_vars(), "--r must have one entry per variable", "DimensionMismatch");
        validated = true;
        res = cf::gauss_sum_multi(f, d, q, r, how);
      } else {
        validated = true;
        res = cf::kappa_sum(parity, q, a, b, how);
      }
      out["q"] = q;
      out["value"] = complex_json(res.value);
      out["bound"] = res.bound;
      out["method"] = res.method == cf::sum_method::closed_form ? "closed" : "brute";
    } else if (series->parsed()) {
      auto f = load_form(form_path);
      usage_check(series_cut >= 1, "cutoff must be at least 1");
      validated = true;
      auto s = cf::singular_series_truncated({f, n_target, series_cut}, series_cut);
      out = envelope("singular-series");
      out["n"] = n_target;
      out["cutoff"] = s.cutoff;
      out["value"] = s.value;
      out["max_imag"] = s.max_imag;
    } else if (sint->parsed()) {
      auto f = load_form(form_path);
      auto psi = make_bump(f.n_vars(), bump_spec);
      usage_check(scale > 0, "scale must be positive");
      usage_check(cutoff > 0, "cutoff must be positive");
      usage_check(!std::isinf(cutoff) || f.n_vars() >= 3, "B = infinity needs at least 3 variables", "NonIntegrable");
      usage_check(tol > 0, "tolerance must be positive");
      validated = true;
      auto J = cf::singular_integral(f, psi, static_cast<double>(n_target), scale, cutoff, tol);
      out = envelope("singular-integral");
      out["n"] = n_target;
      out["scale"] = scale;
      out["cutoff"] = real_or_inf(cutoff);
      out["value"] = J.value;
      out["est_error"] = J.est_error;
    } else if (rep->parsed()) {
      auto f = load_form(form_path);
      out = envelope("rep-count");
      out["n"] = n_target;
      if (weighted) {
        auto psi = make_bump(f.n_vars(), bump_spec);
        usage_check(scale > 0, "scale must be positive");
        validated = true;
        out["scale"] = scale;
        out["weighted_count"] = cf::rep_weighted(f, psi, scale, n_target);
      } else {
        usage_check(f.positive_definite(), "unweighted counts need a positive definite form", "NotPositiveDefinite");
        usage_check(n_target > 0, "n must be positive");
        validated = true;
        out["count"] = cf::rep_count_exact(f, n_target);
      }
    } else if (verify->parsed()) {
      auto f = load_form(form_path);
      usage_check(f.positive_definite(), "verify needs a positive definite form", "NotPositiveDefinite");
      usage_check(f.n_vars() >= 4, "verify needs at least 4 variables");
      usage_check(n_max >= 1, "n-max must be positive");
      usage_check(series_cut >= 1, "cutoff must be at least 1");
      validated = true;
      std::vector<cf::i64> ns;
      for (cf::i64 n = 1; n <= n_max; ++n) ns.push_back(n);
      auto reports = cf::asymptotic_reports(f, ns, series_cut, eps);
      out = envelope("verify");
      out["cutoff"] = series_cut;
      out["eps"] = eps;
      json rows = json::array();
      for (const auto& r : reports)
        rows.push_back({{"n", r.n_target},
                        {"exact", r.exact},
                        {"main", r.main_term},
                        {"residual", r.residual},
                        {"normalized_error", r.normalized_error},
                        {"near_zero_main", r.near_zero_main}});
      out["reports"] = rows;
      out["max_normalized_error"] = cf::max_normalized_error(reports);
      if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw usage_error("CsvPath", "cannot write " + csv_path);
        csv << "n,exact,main,residual,normalized_error\n";
        csv.precision(17);
        for (const auto& r : reports)
          csv << r.n_target << ',' << r.exact << ',' << r.main_term << ',' << r.residual << ',' << r.normalized_error
              << "\n";
      }
    } else if (decomp->parsed()) {
      auto f = load_form(form_path);
      auto psi = make_bump(f.n_vars(), bump_spec);
      usage_check(scale > 0, "scale must be positive");
      usage_check(order >= 1, "order must be at least 1", "OrderTooSmall");
      usage_check(r_cut >= 0 && tol > 0, "need r-cut >= 0 and tol > 0");
      validated = true;
      auto dcmp = cf::full_decomposition(f, psi, scale, n_target, order, r_cut, tol);
      out = envelope("decompose");
      out["n"] = n_target;
      out["M"] = dcmp.M;
      out["E1"] = dcmp.E1;
      out["E2"] = dcmp.E2;
      out["E3"] = dcmp.E3;
      out["total"] = dcmp.total;
      out["R"] = dcmp.R;
      out["e3_tail_bound"] = dcmp.e3_tail_bound;
    }
    out["seed"] = seed;
    emit(out);
    return 0;
  } catch (const usage_error& e) {
    return report_error("UsageError", e.code, e.what(), 2);
  } catch (const cf::error& e) {
    // library rejections of the inputs themselves count as usage errors
    return validated ? report_error("ComputationError", std::string(e.name()), e.what(), 1)
                     : report_error("UsageError", std::string(e.name()), e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("ComputationError", "Internal", e.what(), 1);
  }
}
