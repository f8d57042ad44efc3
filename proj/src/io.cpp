#include "duprate/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "duprate/csv.hpp"

namespace duprate::io {

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json* member(const json& block, const std::string& key) {
    if (!block.is_object()) return nullptr;
    auto it = block.find(key);
    return it == block.end() ? nullptr : &*it;
}

double number(const json& block, const std::string& key, const std::string& path, double fallback) {
    const json* v = member(block, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(join(path, key), "expected a number");
    return v->get<double>();
}

double required_number(const json& block, const std::string& key, const std::string& path) {
    if (!member(block, key)) throw ConfigError(join(path, key), "required key is missing");
    return number(block, key, path, 0.0);
}

long long integer(const json& block, const std::string& key, const std::string& path, long long fallback) {
    const json* v = member(block, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
    return v->get<long long>();
}

bool boolean(const json& block, const std::string& key, const std::string& path, bool fallback) {
    const json* v = member(block, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
    return v->get<bool>();
}

std::string string(const json& block, const std::string& key, const std::string& path,
                   const std::string& fallback) {
    const json* v = member(block, key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(join(path, key), "expected a string");
    return v->get<std::string>();
}

std::vector<std::string> strings(const json& block, const std::string& key, const std::string& path) {
    const json* v = member(block, key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(join(path, key), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string())
            throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*v)[i].get<std::string>());
    }
    return out;
}

std::vector<double> numbers(const json& block, const std::string& key, const std::string& path) {
    const json* v = member(block, key);
    if (!v) return {};
    if (!v->is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number())
            throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back((*v)[i].get<double>());
    }
    return out;
}

void require_object(const json& block, const std::string& path) {
    if (!block.is_object()) throw ConfigError(path, "expected an object");
}

Days timestamp(const json& block, const std::string& key, const std::string& path) {
    const json* v = member(block, key);
    if (v->is_number()) return v->get<double>();
    if (v->is_string())
        if (auto t = parse_iso8601(v->get<std::string>())) return *t;
    throw ConfigError(join(path, key), "expected an ISO-8601 timestamp or a day number");
}

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt_time(const std::optional<Days>& t) { return t ? format_iso8601(*t) : std::string{}; }

std::optional<Days> parse_time_field(const std::string& text, const std::string& column, std::size_t row) {
    if (text.empty()) return std::nullopt;
    auto t = parse_iso8601(text);
    if (!t) throw std::runtime_error("column '" + column + "' row " + std::to_string(row + 1) +
                                     ": malformed timestamp '" + text + "'");
    return t;
}

std::optional<std::string> opt_field(const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

double parse_number_field(const std::string& text, const std::string& column, std::size_t row) {
    auto v = csv::parse_double(text);
    if (!v) throw std::runtime_error("column '" + column + "' row " + std::to_string(row + 1) +
                                     ": expected a number, got '" + text + "'");
    return *v;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string Provenance::comment() const {
    return std::string("# duprate ") + kVersion + " config_sha=" + config_sha + " seed=" + std::to_string(seed);
}

json Provenance::to_json() const {
    return {{"tool", "duprate"}, {"version", kVersion}, {"config_sha", config_sha}, {"seed", seed}};
}

Provenance make_provenance(const json& config, std::uint64_t seed) {
    return {sha256_hex(config.dump()), seed};
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << contents;
}

void write_json(const std::string& path, json body, const Provenance& prov) {
    body["provenance"] = prov.to_json();
    write_text_file(path, body.dump(2) + "\n");
}

sim::SimConfig parse_sim_config(const json& block, std::uint64_t seed) {
    const std::string path = "simulate";
    require_object(block, path);
    sim::SimConfig cfg;
    cfg.seed = seed;
    cfg.horizon = number(block, "horizon_days", path, cfg.horizon);
    cfg.replicates = static_cast<int>(integer(block, "replicates", path, 1));
    if (cfg.replicates < 1) throw ConfigError(join(path, "replicates"), "must be >= 1");
    if (!(cfg.horizon > 0.0)) throw ConfigError(join(path, "horizon_days"), "must be > 0");
    const double mu = number(block, "death_base_rate", path, 0.065);
    const double scale = number(block, "death_scale", path, 100.0);
    const json* types = member(block, "types");
    if (!types || !types->is_array() || types->empty())
        throw ConfigError(join(path, "types"), "expected a non-empty array of types");
    for (std::size_t i = 0; i < types->size(); ++i) {
        const std::string tp = join(path, "types") + "[" + std::to_string(i) + "]";
        const json& t = (*types)[i];
        require_object(t, tp);
        sim::TypeSpec spec;
        spec.index = static_cast<int>(i);
        if (member(t, "incident_rate")) {
            const double r = number(t, "incident_rate", tp, 0.0);
            if (!(r >= 0.0)) throw ConfigError(join(tp, "incident_rate"), "must be >= 0");
            spec.incident_log_rate = std::log(r);
        } else {
            spec.incident_log_rate = required_number(t, "incident_log_rate", tp);
        }
        if (member(t, "report_rate")) {
            const double r = number(t, "report_rate", tp, 0.0);
            if (!(r > 0.0)) throw ConfigError(join(tp, "report_rate"), "must be > 0");
            spec.report_log_rate = std::log(r);
        } else {
            spec.report_log_rate = required_number(t, "report_log_rate", tp);
        }
        spec.death_base_rate = number(t, "death_base_rate", tp, mu);
        spec.death_scale = number(t, "death_scale", tp, scale);
        spec.covariates = numbers(t, "covariates", tp);
        try {
            spec.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(tp, e.what());
        }
        cfg.types.push_back(spec);
    }
    return cfg;
}

sim::CalibrationOptions parse_calibration_options(const json& block) {
    const std::string path = "calibrate";
    sim::CalibrationOptions o;
    o.tolerance = number(block, "tolerance", path, o.tolerance);
    o.min_rate = number(block, "min_rate", path, o.min_rate);
    o.max_rate = number(block, "max_rate", path, o.max_rate);
    o.replicates = static_cast<int>(integer(block, "replicates", path, o.replicates));
    o.max_iterations = static_cast<int>(integer(block, "max_iterations", path, o.max_iterations));
    if (o.replicates < 1) throw ConfigError(join(path, "replicates"), "must be >= 1");
    if (!(o.min_rate > 0.0 && o.max_rate > o.min_rate))
        throw ConfigError(join(path, "min_rate"), "need 0 < min_rate < max_rate");
    return o;
}

sim::ReportLogSpec parse_report_log_spec(const json& block, std::uint64_t seed) {
    const std::string path = "report_log";
    require_object(block, path);
    sim::ReportLogSpec s;
    s.seed = seed;
    const long long n = integer(block, "incidents", path, static_cast<long long>(s.incidents));
    if (n < 0) throw ConfigError(join(path, "incidents"), "must be >= 0");
    s.incidents = static_cast<std::size_t>(n);
    s.intercept = number(block, "intercept", path, s.intercept);
    if (const json* covs = member(block, "covariates")) {
        if (!covs->is_object()) throw ConfigError(join(path, "covariates"), "expected {name: coefficient}");
        for (const auto& [name, v] : covs->items()) {
            if (!v.is_number()) throw ConfigError(join(path, "covariates." + name), "expected a number");
            s.covariate_names.push_back(name);
            s.covariate_coefs.push_back(v.get<double>());
        }
    }
    if (const json* factors = member(block, "factors")) {
        if (!factors->is_object()) throw ConfigError(join(path, "factors"), "expected {name: {level: effect}}");
        for (const auto& [name, levels] : factors->items()) {
            const std::string fp = join(path, "factors." + name);
            if (!levels.is_object() || levels.size() < 2)
                throw ConfigError(fp, "expected at least two {level: effect} entries");
            sim::ReportLogSpec::Factor f{name, {}, {}};
            for (const auto& [level, effect] : levels.items()) {
                if (!effect.is_number()) throw ConfigError(fp + "." + level, "expected a number");
                f.levels.push_back(level);
                f.effects.push_back(effect.get<double>());
            }
            s.factors.push_back(std::move(f));
        }
    }
    s.zero_inflation = number(block, "zero_inflation", path, s.zero_inflation);
    if (!(s.zero_inflation >= 0.0 && s.zero_inflation < 1.0))
        throw ConfigError(join(path, "zero_inflation"), "must be in [0, 1)");
    s.span_days = number(block, "span_days", path, s.span_days);
    s.inspection_rate = number(block, "inspection_rate", path, s.inspection_rate);
    s.workorder_rate = number(block, "workorder_rate", path, s.workorder_rate);
    s.repeat_call_probability = number(block, "repeat_call_probability", path, s.repeat_call_probability);
    if (!(s.span_days > 0.0)) throw ConfigError(join(path, "span_days"), "must be > 0");
    if (!(s.inspection_rate > 0.0)) throw ConfigError(join(path, "inspection_rate"), "must be > 0");
    if (!(s.workorder_rate > 0.0)) throw ConfigError(join(path, "workorder_rate"), "must be > 0");
    if (!(s.repeat_call_probability >= 0.0 && s.repeat_call_probability < 1.0))
        throw ConfigError(join(path, "repeat_call_probability"), "must be in [0, 1)");
    return s;
}

intervals::BuildOptions parse_build_options(const json& block) {
    const std::string path = "build";
    require_object(block, path);
    intervals::BuildOptions o;
    const std::string variant = string(block, "variant", path, "nyc");
    const double max_duration = number(block, "max_duration_days", path, 100.0);
    if (variant == "nyc") {
        o.policy = intervals::IntervalPolicy::nyc(max_duration, number(block, "min_duration_days", path, 0.1));
    } else if (variant == "chicago") {
        if (!member(block, "data_retrieval_time"))
            throw ConfigError(join(path, "data_retrieval_time"), "required for the chicago variant");
        o.policy = intervals::IntervalPolicy::chicago(timestamp(block, "data_retrieval_time", path), max_duration,
                                                      number(block, "min_duration_days", path, 0.01));
    } else if (variant == "last_report") {
        o.policy = intervals::IntervalPolicy::last_report(number(block, "min_duration_days", path, 0.0));
    } else {
        throw ConfigError(join(path, "variant"), "expected nyc, chicago or last_report, got '" + variant + "'");
    }
    try {
        o.policy.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    o.conservative_repeat_filter = boolean(block, "conservative_repeat_filter", path, false);
    o.inputs.covariates = strings(block, "covariates", path);
    o.inputs.labels = strings(block, "labels", path);
    o.log_transform = strings(block, "log_transform", path);
    o.standardize = boolean(block, "standardize", path, true);
    return o;
}

estimators::ModelSpec parse_model_spec(const json& block) {
    const std::string path = "fit";
    require_object(block, path);
    estimators::ModelSpec m;
    m.design.intercept = boolean(block, "intercept", path, true);
    m.design.covariates = strings(block, "covariates", path);
    m.zero_inflation = boolean(block, "zero_inflation", path, false);
    m.flat_priors = boolean(block, "flat_priors", path, false);
    if (const json* factors = member(block, "factors")) {
        if (!factors->is_array()) throw ConfigError(join(path, "factors"), "expected an array");
        for (std::size_t i = 0; i < factors->size(); ++i) {
            const std::string fp = join(path, "factors") + "[" + std::to_string(i) + "]";
            const json& f = (*factors)[i];
            require_object(f, fp);
            design::FactorSpec spec;
            spec.name = string(f, "name", fp, "");
            if (spec.name.empty()) throw ConfigError(join(fp, "name"), "required key is missing");
            const std::string enc = string(f, "encoding", fp, "sum_zero");
            if (enc == "sum_zero") spec.encoding = design::Encoding::SumZero;
            else if (enc == "drop_one") spec.encoding = design::Encoding::DropOne;
            else throw ConfigError(join(fp, "encoding"), "expected sum_zero or drop_one");
            if (member(f, "reference")) spec.reference = string(f, "reference", fp, "");
            spec.levels = strings(f, "levels", fp);
            m.design.factors.push_back(std::move(spec));
        }
    }
    if (const json* pens = member(block, "penalties")) {
        if (!pens->is_array()) throw ConfigError(join(path, "penalties"), "expected an array");
        for (std::size_t i = 0; i < pens->size(); ++i) {
            const std::string pp = join(path, "penalties") + "[" + std::to_string(i) + "]";
            const json& p = (*pens)[i];
            require_object(p, pp);
            graph::PenaltySpec spec;
            spec.factor = string(p, "factor", pp, "");
            if (spec.factor.empty()) throw ConfigError(join(pp, "factor"), "required key is missing");
            spec.weight = number(p, "weight", pp, 5.0);
            if (!(spec.weight >= 0.0)) throw ConfigError(join(pp, "weight"), "must be >= 0");
            try {
                if (member(p, "path")) {
                    spec.graph = graph::SpatialGraph::path(strings(p, "path", pp));
                } else {
                    const json* edges = member(p, "edges");
                    if (!edges || !edges->is_array())
                        throw ConfigError(join(pp, "edges"), "expected [[a, b], ...] or a 'path' list");
                    std::vector<std::pair<std::string, std::string>> list;
                    std::vector<std::string> nodes = strings(p, "nodes", pp);
                    std::set<std::string> seen(nodes.begin(), nodes.end());
                    for (std::size_t e = 0; e < edges->size(); ++e) {
                        const json& edge = (*edges)[e];
                        if (!edge.is_array() || edge.size() != 2 || !edge[0].is_string() || !edge[1].is_string())
                            throw ConfigError(join(pp, "edges") + "[" + std::to_string(e) + "]",
                                              "expected a pair of node labels");
                        list.emplace_back(edge[0].get<std::string>(), edge[1].get<std::string>());
                        for (const auto& n : {list.back().first, list.back().second})
                            if (seen.insert(n).second) nodes.push_back(n);
                    }
                    spec.graph = graph::SpatialGraph::from_edges(std::move(nodes), list);
                }
            } catch (const graph::GraphError& e) {
                throw ConfigError(pp, e.what());
            }
            m.penalties.push_back(std::move(spec));
        }
    }
    if (const json* pr = member(block, "priors")) {
        const std::string pp = join(path, "priors");
        require_object(*pr, pp);
        m.priors.intercept = number(*pr, "intercept", pp, m.priors.intercept);
        m.priors.covariate = number(*pr, "covariate", pp, m.priors.covariate);
        m.priors.penalized_factor = number(*pr, "penalized_factor", pp, m.priors.penalized_factor);
        if (const json* ov = member(*pr, "overrides")) {
            require_object(*ov, join(pp, "overrides"));
            for (const auto& [name, v] : ov->items()) {
                if (!v.is_number() || !(v.get<double>() > 0.0))
                    throw ConfigError(join(pp, "overrides." + name), "expected a positive number");
                m.priors.overrides[name] = v.get<double>();
            }
        }
    }
    return m;
}

estimators::OptimizerOptions parse_optimizer_options(const json& block) {
    const std::string path = "fit.optimizer";
    estimators::OptimizerOptions o;
    if (block.is_null()) return o;
    require_object(block, path);
    o.max_iterations = static_cast<int>(integer(block, "max_iterations", path, o.max_iterations));
    o.gradient_tolerance = number(block, "gradient_tolerance", path, o.gradient_tolerance);
    if (o.max_iterations < 1) throw ConfigError(join(path, "max_iterations"), "must be >= 1");
    if (!(o.gradient_tolerance > 0.0)) throw ConfigError(join(path, "gradient_tolerance"), "must be > 0");
    return o;
}

metropolis::SamplerOptions parse_sampler_options(const json& block, std::uint64_t seed) {
    const std::string path = "sample";
    metropolis::SamplerOptions o;
    o.seed = seed;
    if (block.is_null()) return o;
    require_object(block, path);
    o.chains = static_cast<int>(integer(block, "chains", path, o.chains));
    o.warmup = static_cast<int>(integer(block, "warmup", path, o.warmup));
    o.draws = static_cast<int>(integer(block, "draws", path, o.draws));
    o.max_dimension = static_cast<std::size_t>(integer(block, "max_dimension", path,
                                                       static_cast<long long>(o.max_dimension)));
    o.rhat_threshold = number(block, "rhat_threshold", path, o.rhat_threshold);
    if (o.chains < 1) throw ConfigError(join(path, "chains"), "must be >= 1");
    if (o.draws < 2) throw ConfigError(join(path, "draws"), "must be >= 2");
    if (o.warmup < 0) throw ConfigError(join(path, "warmup"), "must be >= 0");
    return o;
}

intervals::StandardizationStats parse_standardization(const json& block) {
    const std::string path = "standardization";
    require_object(block, path);
    intervals::StandardizationStats stats;
    for (const auto& [name, e] : block.items()) {
        const std::string ep = join(path, name);
        require_object(e, ep);
        intervals::StandardizationStats::Entry entry;
        entry.name = name;
        entry.mean = required_number(e, "mean", ep);
        entry.sd = required_number(e, "sd", ep);
        entry.log_transformed = boolean(e, "log", ep, false);
        if (!(entry.sd > 0.0)) throw ConfigError(join(ep, "sd"), "must be > 0");
        stats.entries.push_back(entry);
    }
    return stats;
}

json standardization_to_json(const intervals::StandardizationStats& stats) {
    json out = json::object();
    for (const auto& e : stats.entries)
        out[e.name] = {{"mean", e.mean}, {"sd", e.sd}, {"log", e.log_transformed}};
    return out;
}

analysis::CovariateProfile parse_profile(const json& block, const std::string& key) {
    require_object(block, key);
    analysis::CovariateProfile p;
    p.standardized = boolean(block, "standardized", key, false);
    if (const json* lv = member(block, "levels")) {
        require_object(*lv, join(key, "levels"));
        for (const auto& [f, l] : lv->items()) {
            if (!l.is_string()) throw ConfigError(join(key, "levels." + f), "expected a string");
            p.levels[f] = l.get<std::string>();
        }
    }
    if (const json* cv = member(block, "covariates")) {
        require_object(*cv, join(key, "covariates"));
        for (const auto& [c, v] : cv->items()) {
            if (!v.is_number()) throw ConfigError(join(key, "covariates." + c), "expected a number");
            p.covariates[c] = v.get<double>();
        }
    }
    return p;
}

// ---- reports ----------------------------------------------------------------

namespace {

const std::vector<std::string> kReportColumns = {
    "report_id", "incident_id", "created", "category", "tract_id", "first_name", "last_name", "phone",
    "email", "inspection", "workorder_created", "workorder_closed", "closed"};

}  // namespace

std::vector<intervals::ReportRow> read_reports(const std::string& path) {
    const auto table = csv::Table::read_file(path);
    const std::size_t c_id = table.require_column("report_id");
    const std::size_t c_inc = table.require_column("incident_id");
    const std::size_t c_created = table.require_column("created");
    auto col = [&](const char* name) { return table.column(name); };
    const auto c_cat = col("category"), c_tract = col("tract_id"), c_first = col("first_name"),
               c_last = col("last_name"), c_phone = col("phone"), c_email = col("email"),
               c_insp = col("inspection"), c_wo = col("workorder_created"), c_wod = col("workorder_closed"),
               c_closed = col("closed");
    std::vector<std::size_t> extra;
    for (std::size_t i = 0; i < table.header().size(); ++i)
        if (std::find(kReportColumns.begin(), kReportColumns.end(), table.header()[i]) == kReportColumns.end())
            extra.push_back(i);

    std::vector<intervals::ReportRow> rows;
    rows.reserve(table.size());
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& f = table.rows()[r];
        auto get = [&](const std::optional<std::size_t>& c) { return c ? f[*c] : std::string{}; };
        intervals::ReportRow row;
        row.report_id = f[c_id];
        row.incident_id = opt_field(f[c_inc]);
        auto created = parse_time_field(f[c_created], "created", r);
        if (!created) throw std::runtime_error("column 'created' row " + std::to_string(r + 1) + ": empty");
        row.created = *created;
        row.category = get(c_cat);
        row.tract_id = opt_field(get(c_tract));
        row.first_name = opt_field(get(c_first));
        row.last_name = opt_field(get(c_last));
        row.phone = opt_field(get(c_phone));
        row.email = opt_field(get(c_email));
        row.inspection = parse_time_field(get(c_insp), "inspection", r);
        row.workorder = parse_time_field(get(c_wo), "workorder_created", r);
        row.workorder_done = parse_time_field(get(c_wod), "workorder_closed", r);
        row.closed = parse_time_field(get(c_closed), "closed", r);
        for (std::size_t c : extra) {
            const std::string& v = f[c];
            if (v.empty()) continue;
            row.labels[table.header()[c]] = v;
            if (auto x = csv::parse_double(v)) row.numeric[table.header()[c]] = *x;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_reports(std::ostream& out, const std::vector<intervals::ReportRow>& rows, const Provenance& prov) {
    std::set<std::string> extra_set;
    for (const auto& r : rows) {
        for (const auto& [k, _] : r.labels) extra_set.insert(k);
        for (const auto& [k, _] : r.numeric) extra_set.insert(k);
    }
    const std::vector<std::string> extra(extra_set.begin(), extra_set.end());
    out << prov.comment() << '\n';
    std::vector<std::string> header = kReportColumns;
    header.insert(header.end(), extra.begin(), extra.end());
    csv::write_row(out, header);
    for (const auto& r : rows) {
        std::vector<std::string> f = {r.report_id,
                                      r.incident_id.value_or(""),
                                      format_iso8601(r.created),
                                      r.category,
                                      r.tract_id.value_or(""),
                                      r.first_name.value_or(""),
                                      r.last_name.value_or(""),
                                      r.phone.value_or(""),
                                      r.email.value_or(""),
                                      fmt_time(r.inspection),
                                      fmt_time(r.workorder),
                                      fmt_time(r.workorder_done),
                                      fmt_time(r.closed)};
        for (const auto& k : extra) {
            if (auto it = r.numeric.find(k); it != r.numeric.end()) f.push_back(fmt(it->second));
            else if (auto lt = r.labels.find(k); lt != r.labels.end()) f.push_back(lt->second);
            else f.emplace_back();
        }
        csv::write_row(out, f);
    }
}

// ---- observations -------------------------------------------------------------

namespace {

constexpr std::string_view kCovariatePrefix = "covariate:";
constexpr std::string_view kLabelPrefix = "label:";

}  // namespace

void write_observations(std::ostream& out, const std::vector<intervals::ObservationRecord>& records,
                        const Provenance& prov) {
    std::set<std::string> covs, labels;
    for (const auto& r : records) {
        for (const auto& [k, _] : r.covariates) covs.insert(k);
        for (const auto& [k, _] : r.labels) labels.insert(k);
    }
    out << prov.comment() << '\n';
    std::vector<std::string> header = {"incident_id", "start", "end", "exposure_days", "m_tilde",
                                       "inspection", "workorder_closed"};
    for (const auto& c : covs) header.push_back(std::string(kCovariatePrefix) + c);
    for (const auto& l : labels) header.push_back(std::string(kLabelPrefix) + l);
    csv::write_row(out, header);
    for (const auto& r : records) {
        std::vector<std::string> f = {r.incident_id, fmt(r.start), fmt(r.end), fmt(r.exposure()),
                                      std::to_string(r.m_tilde), r.inspection ? fmt(*r.inspection) : "",
                                      r.workorder_done ? fmt(*r.workorder_done) : ""};
        for (const auto& c : covs) {
            auto it = r.covariates.find(c);
            f.push_back(it == r.covariates.end() ? "" : fmt(it->second));
        }
        for (const auto& l : labels) {
            auto it = r.labels.find(l);
            f.push_back(it == r.labels.end() ? "" : it->second);
        }
        csv::write_row(out, f);
    }
}

std::vector<intervals::ObservationRecord> read_observations(const std::string& path) {
    const auto table = csv::Table::read_file(path);
    const std::size_t c_id = table.require_column("incident_id");
    const std::size_t c_start = table.require_column("start");
    const std::size_t c_end = table.require_column("end");
    const std::size_t c_m = table.require_column("m_tilde");
    const auto c_insp = table.column("inspection");
    const auto c_wo = table.column("workorder_closed");
    std::vector<std::pair<std::size_t, std::string>> covs, labels;
    for (std::size_t i = 0; i < table.header().size(); ++i) {
        const std::string& h = table.header()[i];
        if (h.starts_with(kCovariatePrefix)) covs.emplace_back(i, h.substr(kCovariatePrefix.size()));
        else if (h.starts_with(kLabelPrefix)) labels.emplace_back(i, h.substr(kLabelPrefix.size()));
    }
    std::vector<intervals::ObservationRecord> out;
    out.reserve(table.size());
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& f = table.rows()[r];
        intervals::ObservationRecord rec;
        rec.incident_id = f[c_id];
        rec.start = parse_number_field(f[c_start], "start", r);
        rec.end = parse_number_field(f[c_end], "end", r);
        const double m = parse_number_field(f[c_m], "m_tilde", r);
        if (!(m >= 0.0) || m != std::floor(m))
            throw std::runtime_error("column 'm_tilde' row " + std::to_string(r + 1) +
                                     ": expected a non-negative integer");
        rec.m_tilde = static_cast<std::size_t>(m);
        if (c_insp && !f[*c_insp].empty()) rec.inspection = parse_number_field(f[*c_insp], "inspection", r);
        if (c_wo && !f[*c_wo].empty()) rec.workorder_done = parse_number_field(f[*c_wo], "workorder_closed", r);
        for (const auto& [c, name] : covs)
            if (!f[c].empty()) rec.covariates[name] = parse_number_field(f[c], table.header()[c], r);
        for (const auto& [c, name] : labels)
            if (!f[c].empty()) rec.labels[name] = f[c];
        out.push_back(std::move(rec));
    }
    return out;
}

void write_traces(std::ostream& out, const std::vector<sim::IncidentTrace>& traces, int replicate,
                  const Provenance& prov) {
    if (replicate == 0) {
        out << prov.comment() << '\n';
        csv::write_row(out, {"replicate", "incident_id", "type_index", "birth", "death", "censored",
                             "report_times"});
    }
    for (const auto& t : traces) {
        std::string times;
        for (std::size_t k = 0; k < t.report_times.size(); ++k) {
            if (k) times.push_back(';');
            times += fmt(t.report_times[k]);
        }
        csv::write_row(out, {std::to_string(replicate), std::to_string(t.id), std::to_string(t.type_index),
                             fmt(t.birth), fmt(t.death), t.censored ? "1" : "0", times});
    }
}

// ---- coefficients ---------------------------------------------------------------

void write_coefficients(std::ostream& out, const estimators::FitResult& fit, const Provenance& prov) {
    out << prov.comment() << '\n';
    csv::write_row(out, {"name", "mean", "sd", "q2.5", "q97.5"});
    for (const auto& [factor, level] : fit.reference_levels)
        csv::write_row(out, {design::level_name(factor, level), "0", "", "", ""});
    for (const auto& c : fit.coefficients)
        csv::write_row(out, {c.name, fmt(c.estimate), fmt(c.sd), fmt(c.lower), fmt(c.upper)});
}

estimators::FitResult read_coefficients(const std::string& path) {
    const auto table = csv::Table::read_file(path);
    const std::size_t c_name = table.require_column("name");
    const std::size_t c_mean = table.require_column("mean");
    const auto c_sd = table.column("sd"), c_lo = table.column("q2.5"), c_hi = table.column("q97.5");
    estimators::FitResult fit;
    fit.converged = true;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& f = table.rows()[r];
        auto opt_number = [&](const std::optional<std::size_t>& c, const char* col) {
            return (c && !f[*c].empty()) ? parse_number_field(f[*c], col, r) : nan;
        };
        estimators::Coefficient c;
        c.name = f[c_name];
        c.estimate = parse_number_field(f[c_mean], "mean", r);
        const bool blank_sd = !c_sd || f[*c_sd].empty();
        const auto open = c.name.find('[');
        if (blank_sd && c.estimate == 0.0 && open != std::string::npos && c.name.back() == ']') {
            fit.reference_levels[c.name.substr(0, open)] = c.name.substr(open + 1, c.name.size() - open - 2);
            continue;
        }
        c.sd = opt_number(c_sd, "sd");
        c.lower = opt_number(c_lo, "q2.5");
        c.upper = opt_number(c_hi, "q97.5");
        if (c.name == estimators::kZeroInflationName) fit.zero_inflation = c.estimate;
        fit.coefficients.push_back(c);
    }
    return fit;
}

json fit_diagnostics(const estimators::FitResult& fit) {
    json d;
    d["converged"] = fit.converged;
    d["iterations"] = fit.iterations;
    d["gradient_norm"] = fit.gradient_norm;
    d["log_posterior"] = fit.log_posterior;
    d["regularized_steps"] = fit.regularized_steps;
    d["reference_levels"] = fit.reference_levels;
    d["zero_inflation"] = fit.zero_inflation ? json(*fit.zero_inflation) : json(nullptr);
    d["free_parameters"] = fit.layout.free_names;
    return d;
}

// ---- conversions -----------------------------------------------------------------

std::vector<intervals::ReportRow> traces_to_reports(const std::vector<sim::IncidentTrace>& traces,
                                                    Days epoch_day) {
    std::vector<intervals::ReportRow> rows;
    for (const auto& t : traces) {
        const std::string id = std::to_string(t.id);
        for (std::size_t k = 0; k < t.report_times.size(); ++k) {
            intervals::ReportRow row;
            row.report_id = id + "-" + std::to_string(k);
            row.incident_id = id;
            row.created = epoch_day + t.report_times[k];
            row.category = "type" + std::to_string(t.type_index);
            row.phone = row.report_id;
            if (!t.censored) row.closed = epoch_day + t.death;
            row.labels["type"] = std::to_string(t.type_index);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<intervals::ReportRow> synthetic_to_reports(const std::vector<sim::SyntheticIncident>& log,
                                                       const sim::ReportLogSpec& spec, Days epoch_day) {
    std::vector<intervals::ReportRow> rows;
    for (const auto& inc : log) {
        const std::string id = std::to_string(inc.id);
        for (std::size_t k = 0; k < inc.reports.size(); ++k) {
            intervals::ReportRow row;
            row.report_id = id + "-" + std::to_string(k);
            row.incident_id = id;
            row.created = epoch_day + inc.reports[k].created;
            row.phone = id + "-caller" + std::to_string(inc.reports[k].caller);
            row.inspection = epoch_day + inc.inspection;
            row.workorder_done = epoch_day + inc.workorder_done;
            for (std::size_t c = 0; c < spec.covariate_names.size(); ++c)
                row.numeric[spec.covariate_names[c]] = inc.covariates[c];
            for (std::size_t f = 0; f < spec.factors.size(); ++f) {
                const auto& factor = spec.factors[f];
                const std::string& level = factor.levels[static_cast<std::size_t>(inc.levels[f])];
                row.labels[factor.name] = level;
                if (factor.name == "category") row.category = level;
                if (factor.name == "tract") row.tract_id = level;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace duprate::io
