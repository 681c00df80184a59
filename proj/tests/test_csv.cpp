#include "momentda/csv.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace momentda;

TEST(Csv, ParsesHeaderAndBlankLines) {
    const Matrix m = parse_csv("a,b\n1,2\n\n3.5,-4e-1\n");
    ASSERT_EQ(m.rows(), 2);
    ASSERT_EQ(m.cols(), 2);
    EXPECT_DOUBLE_EQ(m(1, 0), 3.5);
    EXPECT_DOUBLE_EQ(m(1, 1), -0.4);
}

TEST(Csv, HeaderlessInput) {
    const Matrix m = parse_csv("1\n2\n3\n");
    EXPECT_EQ(m.rows(), 3);
    EXPECT_EQ(m.cols(), 1);
}

TEST(Csv, RejectsRaggedAndNonNumericRows) {
    EXPECT_THROW(parse_csv("1,2\n3\n"), std::invalid_argument);
    EXPECT_THROW(parse_csv("1,2\nx,3\n"), std::invalid_argument);
}

TEST(Csv, RoundTripsExactly) {
    Matrix m(2, 3);
    m << 0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.123456789;
    const auto path = (std::filesystem::temp_directory_path() / "momentda_csv_roundtrip.csv").string();
    write_csv(path, m, {"a", "b", "c"});
    const Matrix back = read_csv(path);
    std::remove(path.c_str());
    ASSERT_EQ(back.rows(), 2);
    for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_EQ(back.data()[i], m.data()[i]);
}
