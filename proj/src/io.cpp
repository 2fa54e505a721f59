#include "iselab/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "iselab/errors.hpp"
#include "iselab/ise.hpp"
#include "iselab/ucp.hpp"

namespace iselab {

namespace {

using json = nlohmann::json;

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw InputError(where + " must be a JSON object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw InputError("unknown key '" + k + "' in " + where);
}

const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InputError("missing key '" + std::string(key) + "' in " + where);
    return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

std::optional<double> opt_real(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

template <class F>
auto translate(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed JSON value: ") + e.what());
    }
}

} // namespace

PotentialModel model_from_json(const json& j) {
    return translate([&] {
        allow_keys(j, {"dimension", "G", "V0", "single_site", "disorder"}, "model");
        PotentialModel m;
        m.dimension = get_or(j, "dimension", 2);
        m.period = get_or(j, "G", 1.0);

        const auto& v = need(j, "V0", "model");
        allow_keys(v, {"kind", "params"}, "V0");
        const auto kind = periodic_kind_from_string(need(v, "kind", "V0").get<std::string>());
        const json params = v.contains("params") ? v.at("params") : json::object();
        allow_keys(params, {"amplitude", "width"}, "V0.params");
        m.background = PeriodicPotential(kind, m.period, get_or(params, "amplitude", 0.0), get_or(params, "width", 0.5));

        const auto& s = need(j, "single_site", "model");
        allow_keys(s, {"kind", "c", "delta", "height", "radius", "cap", "lattice", "centers"}, "single_site");
        auto& ss = m.single_site;
        ss.shape = shape_from_string(get_or<std::string>(s, "kind", "indicator"));
        ss.c = need(s, "c", "single_site").get<double>();
        ss.delta = need(s, "delta", "single_site").get<double>();
        if (ss.shape == SingleSiteProfile::Shape::indicator) {
            ss.height = get_or(s, "height", ss.c);
            ss.radius = get_or(s, "radius", ss.delta);
            ss.cap = get_or(s, "cap", ss.height);
        } else {
            ss.height = need(s, "height", "single_site").get<double>();
            ss.radius = need(s, "radius", "single_site").get<double>();
            ss.cap = get_or(s, "cap", ss.height);
        }
        if (s.contains("lattice")) {
            allow_keys(s.at("lattice"), {"offset"}, "single_site.lattice");
            ss.offset = get_or(s.at("lattice"), "offset", std::vector<double>{});
        }
        if (s.contains("centers")) {
            for (const auto& e : s.at("centers")) {
                allow_keys(e, {"site", "center"}, "single_site.centers entry");
                ss.centers[Site{need(e, "site", "centers entry").get<std::vector<std::int64_t>>()}] =
                    need(e, "center", "centers entry").get<std::vector<double>>();
            }
        }

        const auto& d = need(j, "disorder", "model");
        allow_keys(d, {"kind", "eta", "kappa", "p", "values", "probs"}, "disorder");
        const auto dk = need(d, "kind", "disorder").get<std::string>();
        const auto eta = opt_real(d, "eta"), kappa = opt_real(d, "kappa");
        if (dk == "uniform01")
            m.disorder = DisorderDistribution::uniform01(eta, kappa);
        else if (dk == "bernoulli")
            m.disorder = DisorderDistribution::bernoulli(need(d, "p", "disorder").get<double>(), eta, kappa);
        else if (dk == "table")
            m.disorder = DisorderDistribution::table(need(d, "values", "disorder").get<std::vector<double>>(),
                                                     need(d, "probs", "disorder").get<std::vector<double>>(), eta,
                                                     kappa);
        else
            throw InputError("unknown disorder kind '" + dk + "'");
        m.validate();
        return m;
    });
}

nlohmann::ordered_json model_to_json(const PotentialModel& m) {
    nlohmann::ordered_json j;
    j["dimension"] = m.dimension;
    j["G"] = m.period;
    j["V0"] = {{"kind", to_string(m.background.kind())},
               {"params", {{"amplitude", m.background.amplitude()}, {"width", m.background.width()}}}};
    const auto& s = m.single_site;
    nlohmann::ordered_json ss;
    ss["kind"] = to_string(s.shape);
    ss["c"] = s.c;
    ss["delta"] = s.delta;
    ss["height"] = s.height;
    ss["radius"] = s.radius;
    ss["cap"] = s.cap;
    ss["lattice"] = {{"offset", s.offset}};
    if (!s.centers.empty()) {
        auto& arr = ss["centers"] = nlohmann::ordered_json::array();
        for (const auto& [site, c] : s.centers) arr.push_back({{"site", site.index}, {"center", c}});
    }
    j["single_site"] = ss;
    const auto& d = m.disorder;
    nlohmann::ordered_json dj;
    dj["kind"] = to_string(d.kind());
    if (d.kind() == DisorderDistribution::Kind::bernoulli) dj["p"] = d.p();
    if (d.kind() == DisorderDistribution::Kind::table) {
        dj["values"] = d.values();
        dj["probs"] = d.probs();
    }
    dj["eta"] = d.eta();
    dj["kappa"] = d.kappa();
    j["disorder"] = dj;
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("cannot parse " + path.string() + ": " + e.what());
    }
}

PotentialModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

SolverOptions solver_from_json(const json& j) {
    return translate([&] {
        allow_keys(j, {"tol", "dense_max", "max_eigs", "max_basis", "block_size", "max_block_size"}, "solver");
        SolverOptions s;
        s.tol = get_or(j, "tol", s.tol);
        s.dense_max = get_or(j, "dense_max", s.dense_max);
        s.max_eigs = get_or(j, "max_eigs", s.max_eigs);
        s.max_basis = get_or(j, "max_basis", s.max_basis);
        s.block_size = get_or(j, "block_size", s.block_size);
        s.max_block_size = get_or(j, "max_block_size", s.max_block_size);
        if (!(s.tol > 0.0) || s.block_size < 1 || s.max_block_size < s.block_size || s.max_basis < 8)
            throw InputError("invalid solver options");
        return s;
    });
}

nlohmann::ordered_json solver_to_json(const SolverOptions& s) {
    return {{"tol", s.tol},           {"dense_max", s.dense_max},   {"max_eigs", s.max_eigs},
            {"max_basis", s.max_basis}, {"block_size", s.block_size}, {"max_block_size", s.max_block_size}};
}

ExperimentPlan plan_from_json(const json& j, const std::filesystem::path& base_dir) {
    return translate([&] {
        allow_keys(j, {"model", "L", "alpha", "q", "trials", "seed", "boundary", "h", "hint", "t_step",
                       "check_doubled_box", "solver"},
                   "plan");
        ExperimentPlan p;
        const auto& m = need(j, "model", "plan");
        if (m.is_string()) {
            p.model_ref = m.get<std::string>();
            p.model = load_model(base_dir / p.model_ref);
        } else {
            p.model_ref = "inline";
            p.model = model_from_json(m);
        }
        p.L = need(j, "L", "plan").get<std::vector<double>>();
        p.alpha = need(j, "alpha", "plan").get<double>();
        p.q = need(j, "q", "plan").get<double>();
        p.trials = need(j, "trials", "plan").get<std::size_t>();
        p.seed = need(j, "seed", "plan").get<std::uint64_t>();
        p.boundary = boundary_from_string(get_or<std::string>(j, "boundary", "periodic"));
        p.h = get_or(j, "h", p.h);
        p.hint = opt_real(j, "hint");
        p.t_step = get_or(j, "t_step", p.t_step);
        p.check_doubled_box = get_or(j, "check_doubled_box", p.check_doubled_box);
        if (j.contains("solver")) p.solver = solver_from_json(j.at("solver"));
        p.validate();
        return p;
    });
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
    return plan_from_json(read_json_file(path), path.parent_path());
}

std::string content_hash(const std::string& content) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ULL;
    };
    const std::string head = "blob " + std::to_string(content.size());
    for (unsigned char c : head) feed(c);
    feed(0);
    for (unsigned char c : content) feed(c);
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

RunManifest RunManifest::make(std::string subcommand, nlohmann::ordered_json parameters, int workers) {
    RunManifest m;
    m.subcommand = std::move(subcommand);
    m.parameters = std::move(parameters);
    m.input_hash = content_hash(m.subcommand + "\n" + m.parameters.dump());
    m.workers = workers;
    return m;
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "iselab";
    j["version"] = version;
    j["subcommand"] = subcommand;
    j["input_hash"] = input_hash;
    j["parameters"] = parameters;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["workers"] = workers;
    return j;
}

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string CsvTable::data_section() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_field(cells[i]);
        }
        out += "\r\n";
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw AssertionFailure("CSV row width differs from header");
        line(r);
    }
    return out;
}

std::string CsvTable::render(const RunManifest* manifest) const {
    std::string out;
    if (manifest) out += "# manifest " + manifest->to_json().dump() + "\r\n";
    return out + data_section();
}

std::string render_json_artifact(const RunManifest& manifest, const nlohmann::ordered_json& data) {
    nlohmann::ordered_json j;
    j["manifest"] = manifest.to_json();
    j["data"] = data;
    return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

CsvTable ise_summary_table(const ISEReport& report) {
    CsvTable t;
    t.header = {"L", "l", "window", "trials", "valid", "p_hat", "ci_lo", "ci_hi", "ledger_verdict"};
    for (const auto& lv : report.levels)
        t.rows.push_back({format_real(lv.L), std::to_string(lv.l), format_real(lv.width), std::to_string(lv.trials),
                          std::to_string(lv.valid), format_real(lv.p_hat), format_real(lv.ci.lo),
                          format_real(lv.ci.hi), lv.ledger.verdict ? "true" : "false"});
    return t;
}

CsvTable lifting_table(const std::vector<LiftingRecord>& records) {
    CsvTable t;
    t.header = {"l",           "L",           "eta",          "c",           "delta",
                "b",           "k0",          "lambda_background", "lambda_test", "lambda_omega",
                "lambda_envelope", "observed_lift", "predicted_floor", "mask_nodes",  "sandwich_ok"};
    for (const auto& r : records)
        t.rows.push_back({std::to_string(r.l), format_real(r.L), format_real(r.eta), format_real(r.c),
                          format_real(r.delta), format_real(r.b), std::to_string(r.k0),
                          format_real(r.lambda_background), format_real(r.lambda_test), format_real(r.lambda_omega),
                          format_real(r.lambda_envelope), format_real(r.observed_lift),
                          format_real(r.predicted_floor), std::to_string(r.mask_nodes),
                          r.sandwich_ok ? "true" : "false"});
    return t;
}

CsvTable ids_table(const IDSRecord& record) {
    CsvTable t;
    t.header = {"E", "N", "truncated", "statistic"};
    for (std::size_t i = 0; i < record.E.size(); ++i)
        t.rows.push_back({format_real(record.E[i]), format_real(record.N[i]), record.truncated[i] ? "true" : "false",
                          record.statistic[i] ? format_real(*record.statistic[i]) : ""});
    return t;
}

std::string ise_svg_plot(const ISEReport& report) {
    const double W = 640, H = 400, left = 70, right = 20, top = 30, bottom = 50;
    double lo = report.levels.empty() ? 1.0 : report.levels.front().L;
    double hi = report.levels.empty() ? 2.0 : report.levels.back().L;
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto X = [&](double L) { return left + (L - lo) / (hi - lo) * (W - left - right); };
    auto Y = [&](double p) { return top + (1.0 - std::clamp(p, 0.0, 1.0)) * (H - top - bottom); };
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return std::string(b);
    };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
    for (double p : {0.0, 0.25, 0.5, 0.75, 1.0})
        s << "<text x=\"" << left - 8 << "\" y=\"" << num(Y(p) + 4) << "\" font-size=\"12\" text-anchor=\"end\">"
          << p << "</text>\n";
    for (const auto& lv : report.levels)
        s << "<text x=\"" << num(X(lv.L)) << "\" y=\"" << H - bottom + 18
          << "\" font-size=\"12\" text-anchor=\"middle\">" << lv.L << "</text>\n";
    s << "<text x=\"" << (W + left) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"13\" text-anchor=\"middle\">L</text>\n";
    s << "<text x=\"18\" y=\"" << (H - bottom + top) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (H - bottom + top) / 2 << ")\">p_hat</text>\n";
    s << "<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" points=\"";
    for (int i = 0; i <= 100; ++i) {
        const double L = lo + (hi - lo) * i / 100.0;
        s << num(X(L)) << "," << num(Y(1.0 - std::pow(L, -report.plan.q))) << (i < 100 ? " " : "");
    }
    s << "\"/>\n";
    for (const auto& lv : report.levels) {
        const double x = X(lv.L);
        s << "<line x1=\"" << num(x) << "\" y1=\"" << num(Y(lv.ci.lo)) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(Y(lv.ci.hi)) << "\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
        s << "<circle cx=\"" << num(x) << "\" cy=\"" << num(Y(lv.p_hat)) << "\" r=\"4\" fill=\"steelblue\"/>\n";
    }
    s << "<text x=\"" << W - right << "\" y=\"" << top - 10
      << "\" font-size=\"12\" text-anchor=\"end\">dashed: 1 - L^-q, bars: Wilson 95%</text>\n";
    s << "</svg>\n";
    return s.str();
}

} // namespace iselab
