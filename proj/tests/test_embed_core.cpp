#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nscache/checkpoint.hpp"
#include "nscache/model_params.hpp"

using namespace nscache;

namespace {

std::string temp_path(const std::string& tag) {
    static int counter = 0;
    return (std::filesystem::temp_directory_path() /
            ("nscache_ckpt_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++) + ".bin"))
        .string();
}

}  // namespace

TEST_CASE("init_params is deterministic given the seed") {
    auto a = init_params<float>(ModelKind::TransD, 12, 3, 16, 42);
    auto b = init_params<float>(ModelKind::TransD, 12, 3, 16, 42);
    for (TableId id : a.active_tables()) CHECK(a.table(id) == b.table(id));
    auto c = init_params<float>(ModelKind::TransD, 12, 3, 16, 43);
    CHECK(a.entity_emb != c.entity_emb);
}

TEST_CASE("init_params respects the Xavier bound") {
    const int rows = 10, d = 50;
    auto p = init_params<double>(ModelKind::TransE, rows, 4, d, 1);
    CHECK(p.entity_emb.rows() == rows);
    CHECK(p.entity_emb.cols() == d);
    const double bound_e = std::sqrt(6.0 / (rows + d));
    CHECK(p.entity_emb.cwiseAbs().maxCoeff() <= bound_e);
    const double bound_r = std::sqrt(6.0 / (4 + d));
    CHECK(p.relation_emb.cwiseAbs().maxCoeff() <= bound_r);
}

TEST_CASE("model capability map: optional tables present exactly when required") {
    auto te = init_params<float>(ModelKind::TransE, 5, 2, 8, 0);
    CHECK(te.relation_norm.size() == 0);
    CHECK(te.entity_proj.size() == 0);
    CHECK(te.entity_emb_im.size() == 0);

    auto th = init_params<float>(ModelKind::TransH, 5, 2, 8, 0);
    CHECK(th.relation_norm.rows() == 2);
    for (int r = 0; r < 2; ++r)
        CHECK(th.relation_norm.row(r).norm() == doctest::Approx(1.0).epsilon(1e-5));

    auto td = init_params<float>(ModelKind::TransD, 5, 2, 8, 0);
    CHECK(td.entity_proj.rows() == 5);
    CHECK(td.relation_proj.rows() == 2);

    auto cx = init_params<float>(ModelKind::ComplEx, 5, 2, 8, 0);
    CHECK(cx.entity_emb_im.rows() == 5);
    CHECK(cx.relation_emb_im.rows() == 2);
}

TEST_CASE("init_params rejects empty dictionaries") {
    CHECK_THROWS_AS(init_params<float>(ModelKind::TransE, 0, 2, 8, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(init_params<float>(ModelKind::TransE, 5, 0, 8, 0),
                    std::invalid_argument);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    auto p = init_params<float>(ModelKind::TransD, 9, 3, 12, 5);
    CheckpointMeta meta{.epoch = 17, .config_hash = "abc123"};
    std::string path = temp_path("roundtrip");
    save_checkpoint(p, meta, path);
    auto [q, meta2] = load_checkpoint<float>(path);
    CHECK(meta2.epoch == 17);
    CHECK(meta2.config_hash == "abc123");
    for (TableId id : p.active_tables()) {
        REQUIRE(q.table(id).rows() == p.table(id).rows());
        CHECK(q.table(id) == p.table(id));  // element-wise bit equality for float
    }
    std::filesystem::remove(path);
}

TEST_CASE("truncated payload names the missing table") {
    auto p = init_params<float>(ModelKind::TransD, 9, 3, 12, 5);
    std::string path = temp_path("trunc");
    save_checkpoint(p, {}, path);
    // Chop off the last table (relation_proj).
    auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 3 * 12 * sizeof(float));
    CHECK_THROWS_WITH_AS(load_checkpoint<float>(path),
                         doctest::Contains("relation_proj"), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("dimension mismatch on load is rejected") {
    auto p = init_params<float>(ModelKind::TransE, 9, 3, 50, 5);
    std::string path = temp_path("dims");
    save_checkpoint(p, {}, path);
    auto [q, meta] = load_checkpoint<float>(path);
    CHECK_THROWS_AS(check_checkpoint_compatible(q, ModelKind::TransE, 100, 9, 3),
                    std::runtime_error);
    CHECK_THROWS_AS(check_checkpoint_compatible(q, ModelKind::TransH, 50, 9, 3),
                    std::runtime_error);
    CHECK_NOTHROW(check_checkpoint_compatible(q, ModelKind::TransE, 50, 9, 3));
    std::filesystem::remove(path);
}

TEST_CASE("corrupt header is rejected") {
    std::string path = temp_path("corrupt");
    {
        std::ofstream out(path);
        out << "not-a-checkpoint 9\n";
    }
    CHECK_THROWS_AS(load_checkpoint<float>(path), std::runtime_error);
    std::filesystem::remove(path);
}
