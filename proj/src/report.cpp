#include "opinion_audit/report.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "opinion_audit/csv.hpp"
#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

using ojson = nlohmann::ordered_json;

ReportTable report_table(const GroupedEvaluation& grouped) {
    ReportTable t;
    t.grouping = grouped.strategy.describe();
    t.metric = std::string(metric_name(grouped.metric));
    for (const auto& g : grouped.groups) t.groups.push_back({g.id, g.label, g.members, g.value, g.empty});
    return t;
}

ReportScore report_score(const AuditScore& score) {
    return {score.metric, score.unfairness, score.general_performance, score.groups_used, score.dropped_groups};
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    if (name == "text") return ReportFormat::text;
    throw UsageError(fmt::format("unknown report format \"{}\" (expected json|csv|text)", name));
}

namespace {

ojson table_json(const ReportTable& t) {
    ojson j;
    j["grouping"] = t.grouping;
    j["metric"] = t.metric;
    j["groups"] = ojson::array();
    for (const auto& g : t.groups)
        j["groups"].push_back(
            {{"id", g.id}, {"label", g.label}, {"members", g.members}, {"value", g.value}, {"empty", g.empty}});
    return j;
}

ReportTable table_from(const ojson& j) {
    ReportTable t;
    t.grouping = j.at("grouping").get<std::string>();
    t.metric = j.at("metric").get<std::string>();
    for (const auto& g : j.at("groups"))
        t.groups.push_back({g.at("id").get<std::string>(), g.at("label").get<std::string>(),
                            g.at("members").get<std::vector<std::string>>(), g.at("value").get<double>(),
                            g.at("empty").get<bool>()});
    return t;
}

}  // namespace

std::string report_to_json(const AuditReport& r) {
    ojson j;
    j["schema_version"] = r.schema_version;
    j["tool"] = r.tool;
    j["version"] = r.version;

    ojson demo = ojson::object();
    for (const auto& d : r.dataset.demographics) demo[d.name] = d.values;
    j["dataset"] = {{"fingerprint", r.dataset.fingerprint},
                    {"samples", r.dataset.samples},
                    {"annotators", r.dataset.annotators},
                    {"annotations", r.dataset.annotations},
                    {"labels", r.dataset.labels},
                    {"demographics", demo}};

    const auto& c = r.config;
    j["config"] = {
        {"feature_spec", {{"n_text_buckets", c.n_text_buckets}, {"hash_seed", c.hash_seed}, {"hash", c.feature_spec_hash}}},
        {"train",
         {{"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},
          {"tolerance", c.tolerance},
          {"batch_size", c.batch_size}}},
        {"lambda_grid", c.lambda_grid},
        {"cv_folds", c.cv_folds},
        {"grouping", c.grouping},
        {"bin_edges", c.bin_edges},
        {"metrics", c.metrics},
        {"quality_threshold", c.quality_threshold},
        {"min_support", c.min_support},
        {"seed", c.seed},
        {"split",
         {{"eval_fold", c.eval_fold},
          {"folds", c.split_folds},
          {"train_samples", c.train_samples},
          {"eval_samples", c.eval_samples},
          {"eval_annotations", c.eval_annotations}}},
        {"balance", {{"seed", c.balance_seed}, {"kept", c.balance_kept}, {"discarded", c.balance_discarded}}}};

    ojson filtered = ojson::array();
    for (const auto& f : r.quality.filtered) filtered.push_back({{"annotator_id", f.annotator_id}, {"score", f.score}});
    j["quality"] = {{"threshold", r.quality.threshold},
                    {"scored_annotators", r.quality.scored_annotators},
                    {"min_score", r.quality.min_score},
                    {"mean_score", r.quality.mean_score},
                    {"max_score", r.quality.max_score},
                    {"filtered", filtered}};

    j["models"] = ojson::array();
    for (const auto& m : r.models) {
        ojson mj;
        mj["kind"] = m.kind;
        mj["selected_lambda"] = m.selected_lambda ? ojson(*m.selected_lambda) : ojson(nullptr);
        mj["cv"] = ojson::array();
        for (const auto& p : m.cv)
            mj["cv"].push_back({{"l2_lambda", p.l2_lambda}, {"fold_scores", p.fold_scores}, {"mean", p.mean}});
        mj["training_examples"] = m.training_examples;
        mj["epochs_run"] = m.epochs_run;
        mj["converged"] = m.converged;
        mj["unfairness"] = m.unfairness;
        mj["general_performance"] = m.general_performance;
        mj["scores"] = ojson::array();
        for (const auto& s : m.scores)
            mj["scores"].push_back({{"metric", s.metric},
                                    {"unfairness", s.unfairness},
                                    {"general_performance", s.general_performance},
                                    {"groups_used", s.groups_used},
                                    {"dropped_groups", s.dropped_groups}});
        mj["tables"] = ojson::array();
        for (const auto& t : m.tables) mj["tables"].push_back(table_json(t));
        mj["breakdowns"] = ojson::array();
        for (const auto& t : m.breakdowns) mj["breakdowns"].push_back(table_json(t));
        mj["excluded_users"] = m.excluded_users;
        mj["evaluated_users"] = m.evaluated_users;
        j["models"].push_back(std::move(mj));
    }

    j["warnings"] = ojson::array();
    for (const auto& w : r.warnings) j["warnings"].push_back({{"code", w.code}, {"message", w.message}});
    return j.dump(2) + "\n";
}

AuditReport report_from_json(std::string_view json_text) {
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const ojson::parse_error& e) {
        throw DataError(fmt::format("report is not valid JSON: {}", e.what()));
    }
    AuditReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != report_schema_version)
            throw DataError(fmt::format("unsupported report schema_version {}", r.schema_version));
        r.tool = j.at("tool").get<std::string>();
        r.version = j.at("version").get<std::string>();

        const auto& d = j.at("dataset");
        r.dataset.fingerprint = d.at("fingerprint").get<std::string>();
        r.dataset.samples = d.at("samples").get<std::size_t>();
        r.dataset.annotators = d.at("annotators").get<std::size_t>();
        r.dataset.annotations = d.at("annotations").get<std::size_t>();
        r.dataset.labels = d.at("labels").get<std::vector<std::string>>();
        for (const auto& [name, values] : d.at("demographics").items())
            r.dataset.demographics.push_back({name, values.get<std::vector<std::string>>()});

        const auto& c = j.at("config");
        auto& rc = r.config;
        rc.n_text_buckets = c.at("feature_spec").at("n_text_buckets").get<std::size_t>();
        rc.hash_seed = c.at("feature_spec").at("hash_seed").get<std::uint64_t>();
        rc.feature_spec_hash = c.at("feature_spec").at("hash").get<std::string>();
        rc.learning_rate = c.at("train").at("learning_rate").get<double>();
        rc.max_epochs = c.at("train").at("max_epochs").get<std::size_t>();
        rc.tolerance = c.at("train").at("tolerance").get<double>();
        rc.batch_size = c.at("train").at("batch_size").get<std::size_t>();
        rc.lambda_grid = c.at("lambda_grid").get<std::vector<double>>();
        rc.cv_folds = c.at("cv_folds").get<std::size_t>();
        rc.grouping = c.at("grouping").get<std::string>();
        rc.bin_edges = c.at("bin_edges").get<std::vector<double>>();
        rc.metrics = c.at("metrics").get<std::vector<std::string>>();
        rc.quality_threshold = c.at("quality_threshold").get<double>();
        rc.min_support = c.at("min_support").get<std::size_t>();
        rc.seed = c.at("seed").get<std::uint64_t>();
        const auto& split = c.at("split");
        rc.eval_fold = split.at("eval_fold").get<std::size_t>();
        rc.split_folds = split.at("folds").get<std::size_t>();
        rc.train_samples = split.at("train_samples").get<std::size_t>();
        rc.eval_samples = split.at("eval_samples").get<std::size_t>();
        rc.eval_annotations = split.at("eval_annotations").get<std::size_t>();
        const auto& balance = c.at("balance");
        rc.balance_seed = balance.at("seed").get<std::uint64_t>();
        rc.balance_kept = balance.at("kept").get<std::vector<std::size_t>>();
        rc.balance_discarded = balance.at("discarded").get<std::vector<std::size_t>>();

        const auto& q = j.at("quality");
        r.quality.threshold = q.at("threshold").get<double>();
        r.quality.scored_annotators = q.at("scored_annotators").get<std::size_t>();
        r.quality.min_score = q.at("min_score").get<double>();
        r.quality.mean_score = q.at("mean_score").get<double>();
        r.quality.max_score = q.at("max_score").get<double>();
        for (const auto& f : q.at("filtered"))
            r.quality.filtered.push_back({f.at("annotator_id").get<std::string>(), f.at("score").get<double>()});

        for (const auto& mj : j.at("models")) {
            ReportModel m;
            m.kind = mj.at("kind").get<std::string>();
            if (!mj.at("selected_lambda").is_null()) m.selected_lambda = mj.at("selected_lambda").get<double>();
            for (const auto& p : mj.at("cv"))
                m.cv.push_back({p.at("l2_lambda").get<double>(), p.at("fold_scores").get<std::vector<double>>(),
                                p.at("mean").get<double>()});
            m.training_examples = mj.at("training_examples").get<std::size_t>();
            m.epochs_run = mj.at("epochs_run").get<std::size_t>();
            m.converged = mj.at("converged").get<bool>();
            m.unfairness = mj.at("unfairness").get<double>();
            m.general_performance = mj.at("general_performance").get<double>();
            for (const auto& s : mj.at("scores"))
                m.scores.push_back({s.at("metric").get<std::string>(), s.at("unfairness").get<double>(),
                                    s.at("general_performance").get<double>(), s.at("groups_used").get<std::size_t>(),
                                    s.at("dropped_groups").get<std::vector<std::string>>()});
            for (const auto& t : mj.at("tables")) m.tables.push_back(table_from(t));
            for (const auto& t : mj.at("breakdowns")) m.breakdowns.push_back(table_from(t));
            m.excluded_users = mj.at("excluded_users").get<std::vector<std::string>>();
            m.evaluated_users = mj.at("evaluated_users").get<std::size_t>();
            r.models.push_back(std::move(m));
        }
        for (const auto& w : j.at("warnings"))
            r.warnings.push_back({w.at("code").get<std::string>(), w.at("message").get<std::string>()});
    } catch (const ojson::exception& e) {
        throw DataError(fmt::format("malformed report: {}", e.what()));
    }
    return r;
}

namespace {

std::vector<std::size_t> fairness_ranking(const AuditReport& r) {
    std::vector<std::size_t> order(r.models.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.models[a].unfairness < r.models[b].unfairness; });
    return order;
}

std::string render_text(const AuditReport& r) {
    std::ostringstream out;
    out << fmt::format("{} {} report (schema {})\n", r.tool, r.version, r.schema_version);
    out << fmt::format("dataset: {}  samples={} annotators={} annotations={}\n", r.dataset.fingerprint,
                       r.dataset.samples, r.dataset.annotators, r.dataset.annotations);
    out << fmt::format("grouping: {}  metrics: {}  seed: {}\n", r.config.grouping, fmt::join(r.config.metrics, ","),
                       r.config.seed);
    out << fmt::format("evaluation: {} samples, {} balanced annotations\n", r.config.eval_samples,
                       r.config.eval_annotations);
    if (!r.models.empty()) {
        out << "\nranking (most to least fair):\n";
        std::size_t rank = 1;
        for (std::size_t i : fairness_ranking(r)) {
            const auto& m = r.models[i];
            out << fmt::format("  {}. {:<10} unfairness {}  performance {}\n", rank++, m.kind, fixed(m.unfairness, 4),
                               fixed(m.general_performance, 4));
        }
        if (r.models.size() >= 2) {
            std::vector<std::string> parts;
            for (const auto& m : r.models) parts.push_back(fmt::format("{}: {}", m.kind, fixed(m.unfairness, 2)));
            out << fmt::format("unfairness: {}\n", fmt::join(parts, " vs "));
        }
    }
    for (const auto& m : r.models) {
        for (const auto& t : m.tables) {
            out << fmt::format("\n[{}] {} by {}\n", m.kind, t.metric, t.grouping);
            for (const auto& g : t.groups)
                out << fmt::format("  {:<14} {}  users={}\n", g.label, g.empty ? std::string("  -   ") : fixed(g.value, 4),
                                   g.members.size());
        }
        if (!m.excluded_users.empty())
            out << fmt::format("  excluded below minimum support: {}\n", m.excluded_users.size());
    }
    if (!r.quality.filtered.empty()) {
        out << fmt::format("\nfiltered annotators (quality < {}):\n", fixed(r.quality.threshold, 2));
        for (const auto& f : r.quality.filtered) out << fmt::format("  {} {}\n", f.annotator_id, fixed(f.score, 4));
    }
    if (!r.warnings.empty()) {
        out << "\nwarnings:\n";
        for (const auto& w : r.warnings) out << fmt::format("  [{}] {}\n", w.code, w.message);
    }
    return out.str();
}

std::string render_csv(const AuditReport& r) {
    std::ostringstream out;
    out << "model,section,grouping,metric,group,label,members,value,empty\n";
    auto row = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cells[i]);
        out << '\n';
    };
    for (const auto& m : r.models) {
        for (const auto& s : m.scores) {
            row({m.kind, "score", r.config.grouping, s.metric, "unfairness", "", std::to_string(s.groups_used),
                 fmt::format("{}", s.unfairness), "false"});
            row({m.kind, "score", r.config.grouping, s.metric, "general_performance", "", std::to_string(s.groups_used),
                 fmt::format("{}", s.general_performance), "false"});
        }
        auto tables = [&](const std::vector<ReportTable>& ts, const char* section) {
            for (const auto& t : ts)
                for (const auto& g : t.groups)
                    row({m.kind, section, t.grouping, t.metric, g.id, g.label, std::to_string(g.members.size()),
                         fmt::format("{}", g.value), g.empty ? "true" : "false"});
        };
        tables(m.tables, "group");
        tables(m.breakdowns, "breakdown");
    }
    return out.str();
}

}  // namespace

std::string render_report(const AuditReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return report_to_json(report);
        case ReportFormat::csv: return render_csv(report);
        case ReportFormat::text: return render_text(report);
    }
    return {};
}

std::string render_comparison(const AuditReport& left, const AuditReport& right) {
    std::ostringstream out;
    out << fmt::format("left:  {}  grouping={} metrics={} seed={}\n", left.dataset.fingerprint, left.config.grouping,
                       fmt::join(left.config.metrics, ","), left.config.seed);
    out << fmt::format("right: {}  grouping={} metrics={} seed={}\n", right.dataset.fingerprint,
                       right.config.grouping, fmt::join(right.config.metrics, ","), right.config.seed);
    out << fmt::format("\n{:<10} {:>10} {:>10} {:>10}   {:>10} {:>10} {:>10}\n", "model", "unf.left", "unf.right",
                       "delta", "perf.left", "perf.right", "delta");
    std::vector<std::string> kinds;
    for (const auto* r : {&left, &right})
        for (const auto& m : r->models)
            if (std::find(kinds.begin(), kinds.end(), m.kind) == kinds.end()) kinds.push_back(m.kind);
    auto find = [](const AuditReport& r, const std::string& kind) -> const ReportModel* {
        for (const auto& m : r.models)
            if (m.kind == kind) return &m;
        return nullptr;
    };
    auto cell = [](const ReportModel* m, double ReportModel::*field) {
        return m ? fixed(m->*field, 4) : std::string("-");
    };
    auto delta = [](const ReportModel* a, const ReportModel* b, double ReportModel::*field) {
        return a && b ? fixed(b->*field - a->*field, 4) : std::string("-");
    };
    for (const auto& kind : kinds) {
        const auto* a = find(left, kind);
        const auto* b = find(right, kind);
        out << fmt::format("{:<10} {:>10} {:>10} {:>10}   {:>10} {:>10} {:>10}\n", kind,
                           cell(a, &ReportModel::unfairness), cell(b, &ReportModel::unfairness),
                           delta(a, b, &ReportModel::unfairness), cell(a, &ReportModel::general_performance),
                           cell(b, &ReportModel::general_performance), delta(a, b, &ReportModel::general_performance));
    }
    return out.str();
}

std::vector<HeatmapColumn> heatmap_columns(const AuditReport& report) {
    std::vector<HeatmapColumn> cols;
    for (const auto& m : report.models)
        if (!m.tables.empty()) cols.push_back({m.kind, m.tables.front()});
    return cols;
}

}  // namespace opinion_audit
