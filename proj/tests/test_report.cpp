#include <doctest.h>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/report.hpp"

using namespace opinion_audit;

namespace {

ReportTable adr_table(std::vector<double> values) {
    ReportTable t{"adr [0, 0.2, 0.4, 0.6, 0.8, 1]", "accuracy", {}};
    const auto edges = default_bin_edges();
    for (std::size_t b = 0; b < values.size(); ++b)
        t.groups.push_back({"bin" + std::to_string(b), bin_label(edges, b), {"u" + std::to_string(b)}, values[b],
                            values[b] < 0});
    for (auto& g : t.groups)
        if (g.empty) {
            g.value = 0.0;
            g.members.clear();
        }
    return t;
}

ReportModel model(std::string kind, double unfairness, std::vector<double> values) {
    ReportModel m;
    m.kind = std::move(kind);
    m.selected_lambda = 1e-3;
    m.cv = {{1e-2, {0.7, 0.71}, 0.705}, {1e-3, {0.72, 0.73}, 0.725}};
    m.training_examples = 160;
    m.epochs_run = 42;
    m.converged = true;
    m.unfairness = unfairness;
    m.general_performance = 0.1 + 1.0 / 3.0;
    m.scores = {{"accuracy", unfairness, m.general_performance, 4, {"bin3"}}};
    m.tables = {adr_table(std::move(values))};
    m.excluded_users = {"zed"};
    m.evaluated_users = 4;
    return m;
}

AuditReport sample_report() {
    AuditReport r;
    r.dataset = {"0123456789abcdef", 200, 20, 2000, {"T", "NT"}, {{"age", {"young", "old"}}}};
    r.config.n_text_buckets = 4096;
    r.config.lambda_grid = {1e-2, 1e-3};
    r.config.grouping = "adr [0, 0.2, 0.4, 0.6, 0.8, 1]";
    r.config.bin_edges = default_bin_edges();
    r.config.metrics = {"accuracy"};
    r.config.seed = 9;
    r.config.balance_kept = {100, 100};
    r.config.balance_discarded = {0, 37};
    r.quality = {0.4, 20, 0.31, 0.6, 0.9, {{"a007", 0.31}}};
    r.models = {model("mv", 0.2812345, {0.97, 0.8, 0.6, -1, 0.41}), model("annotator", 0.2291, {0.96, 0.8, 0.62, -1, 0.5})};
    r.models[1].selected_lambda.reset();
    r.warnings = {{"dropped_bins", "bin3 has no users"}};
    return r;
}

}  // namespace

TEST_CASE("report JSON round trip is lossless") {
    const auto r = sample_report();
    const auto text = report_to_json(r);
    const auto back = report_from_json(text);
    CHECK(back == r);
    CHECK(report_to_json(back) == text);
}

TEST_CASE("malformed or foreign reports are rejected") {
    CHECK_THROWS_AS(report_from_json("not json"), DataError);
    CHECK_THROWS_AS(report_from_json("{}"), DataError);
    auto text = report_to_json(sample_report());
    const auto pos = text.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "\"schema_version\": 99");
    CHECK_THROWS_AS(report_from_json(text), DataError);
}

TEST_CASE("text report ranks models and prints the comparison line") {
    const auto text = render_report(sample_report(), ReportFormat::text);
    CHECK(text.find("unfairness: mv: 0.28 vs annotator: 0.23") != std::string::npos);
    const auto first = text.find("1. annotator");
    const auto second = text.find("2. mv");
    CHECK(first != std::string::npos);
    CHECK(second != std::string::npos);
    CHECK(first < second);
}

TEST_CASE("csv report has a header and one row per group") {
    const auto csv = render_report(sample_report(), ReportFormat::csv);
    CHECK(csv.rfind("model,section,grouping,metric,group,label,members,value,empty\n", 0) == 0);
    std::size_t table_rows = 0, pos = csv.find('\n');
    while ((pos = csv.find(",group,", pos)) != std::string::npos) {
        ++table_rows;
        ++pos;
    }
    CHECK(table_rows == 10);
}

TEST_CASE("format names") {
    CHECK(parse_report_format("json") == ReportFormat::json);
    CHECK(parse_report_format("csv") == ReportFormat::csv);
    CHECK(parse_report_format("text") == ReportFormat::text);
    CHECK_THROWS_AS(parse_report_format("xml"), UsageError);
}

TEST_CASE("heatmap shows every cell and is deterministic") {
    const auto r = sample_report();
    const auto cols = heatmap_columns(r);
    REQUIRE(cols.size() == 2);
    const auto svg = render_heatmap(cols);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("0.97") != std::string::npos);
    CHECK(svg.find("0.62") != std::string::npos);
    CHECK(svg.find("n/a") != std::string::npos);
    CHECK(render_heatmap(heatmap_columns(report_from_json(report_to_json(r)))) == svg);
}

TEST_CASE("heatmap refuses inconsistent columns") {
    auto cols = heatmap_columns(sample_report());
    CHECK_THROWS_AS(render_heatmap({}), std::invalid_argument);
    auto mismatched = cols;
    mismatched[1].table.groups[0].members = {"other"};
    CHECK_THROWS_AS(render_heatmap(mismatched), std::invalid_argument);
    auto tiny = cols;
    for (auto& c : tiny) c.table.groups.resize(1);
    CHECK_THROWS_AS(render_heatmap(tiny), std::invalid_argument);
}

TEST_CASE("comparison mentions both reports") {
    auto right = sample_report();
    right.config.seed = 10;
    const auto text = render_comparison(sample_report(), right);
    CHECK(text.find("mv") != std::string::npos);
    CHECK(text.find("annotator") != std::string::npos);
}
