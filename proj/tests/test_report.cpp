#include "oconnell/report.hpp"

#include <gtest/gtest.h>

using namespace oconnell;

namespace {
ReportRow sample_row() {
    ReportRow r;
    r.method = "fredholm";
    r.N = 2;
    r.a = 0.5;
    r.t = 1;
    r.h = -0.1;
    r.value = 0.097009289155765;
    r.error = 1e-12;
    r.seed = 42;
    return r;
}
}  // namespace

TEST(Report, CsvHeaderAndRow) {
    std::string s = emit_report({sample_row()}, ReportFormat::csv);
    EXPECT_EQ(s.substr(0, s.find('\n')), "method,N,a,t,h,value,error,warnings,seed,wall_time_ms");
    EXPECT_NE(s.find("fredholm,2,0.5,1,-0.10000000000000001,0.097009289155764997,9.9999999999999998e-13,,42,0\n"), std::string::npos);
}

TEST(Report, CsvQuotesWarnings) {
    ReportRow r = sample_row();
    r.warnings = "a,b \"c\"";
    std::string s = emit_report({r}, ReportFormat::csv);
    EXPECT_NE(s.find("\"a,b \"\"c\"\"\""), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
    ReportRow r = sample_row();
    r.warnings = "x";
    auto rows = parse_json_report(emit_report({r, r}, ReportFormat::json));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1].method, r.method);
    EXPECT_EQ(rows[1].value, r.value);
    EXPECT_EQ(rows[1].h, r.h);
    EXPECT_EQ(rows[1].seed, r.seed);
    EXPECT_EQ(rows[1].warnings, "x");
}

TEST(Report, EmptyRows) {
    try {
        emit_report({}, ReportFormat::csv);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyReport);
    }
}

TEST(Report, WriteFailure) { EXPECT_THROW(write_report("/nonexistent/dir/out.csv", "x"), Error); }
