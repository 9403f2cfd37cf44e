#include <catch2/catch_amalgamated.hpp>

#include <ecgra/dataset.hpp>
#include <ecgra/rng.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace ecgra;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("ecgra_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Dataset random_dataset(int n, Rng& rng) {
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        EcgRecording r;
        r.id = "rec" + std::to_string(i);
        r.fs = (i % 2 == 0) ? 500.0 : 257.5;
        const std::size_t len = 20 + rng.uniform_below(60);
        r.leads.assign(kNumLeads, std::vector<double>(len));
        for (auto& lead : r.leads)
            for (auto& v : lead) v = rng.gaussian() * 1.7;
        LabelSet ls;
        ls.set(static_cast<int>(rng.uniform_below(kNumClasses)));
        if (rng.uniform01() < 0.3) ls.set(static_cast<int>(rng.uniform_below(kNumClasses)));
        ds.records.push_back({std::move(r), ls});
    }
    return ds;
}

} // namespace

TEST_CASE("save then load reproduces the dataset bit-exactly", "[dataset]") {
    Rng rng(2024);
    Dataset ds = random_dataset(7, rng);
    const fs::path dir = fresh_dir("roundtrip");

    save_dataset(ds, dir);
    Dataset back = load_dataset(dir / "manifest.csv", dir / "labels.csv");

    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& a = ds.records[i];
        const auto& b = back.records[i];
        REQUIRE(a.recording.id == b.recording.id);
        REQUIRE(a.recording.fs == b.recording.fs);
        REQUIRE(a.labels == b.labels);
        REQUIRE(a.recording.leads == b.recording.leads); // exact, not approximate
    }
    fs::remove_all(dir);
}

TEST_CASE("load_dataset_unlabeled reads signals without labels", "[dataset]") {
    Rng rng(7);
    Dataset ds = random_dataset(3, rng);
    const fs::path dir = fresh_dir("unlabeled");
    save_dataset(ds, dir);

    Dataset back = load_dataset_unlabeled(dir / "manifest.csv");
    REQUIRE(back.size() == 3);
    for (const auto& r : back.records) REQUIRE(r.labels.empty());
    REQUIRE(back.records[1].recording.leads == ds.records[1].recording.leads);
    fs::remove_all(dir);
}

TEST_CASE("manifest errors are reported", "[dataset]") {
    Rng rng(8);
    Dataset ds = random_dataset(2, rng);
    const fs::path dir = fresh_dir("badmanifest");
    save_dataset(ds, dir);

    SECTION("declared length mismatch") {
        std::ofstream mf(dir / "manifest.csv");
        mf << "id,path,fs,length\n";
        mf << "rec0,rec0.csv,500,99999\n";
        mf.close();
        REQUIRE_THROWS_AS(load_dataset(dir / "manifest.csv", dir / "labels.csv"), DataError);
    }
    SECTION("duplicate id") {
        std::ofstream mf(dir / "manifest.csv", std::ios::app);
        mf << "rec0,rec0.csv,500," << ds.records[0].recording.length() << "\n";
        mf.close();
        REQUIRE_THROWS_AS(load_dataset(dir / "manifest.csv", dir / "labels.csv"), DataError);
    }
    SECTION("wrong header") {
        std::ofstream mf(dir / "manifest.csv");
        mf << "id,file,rate,len\nrec0,rec0.csv,500,20\n";
        mf.close();
        REQUIRE_THROWS_AS(load_dataset(dir / "manifest.csv", dir / "labels.csv"), DataError);
    }
    SECTION("label id missing from manifest") {
        std::ofstream lf(dir / "labels.csv", std::ios::app);
        lf << "ghost,AF\n";
        lf.close();
        REQUIRE_THROWS_AS(load_dataset(dir / "manifest.csv", dir / "labels.csv"), DataError);
    }
    SECTION("missing labels file") {
        REQUIRE_THROWS_AS(load_dataset(dir / "manifest.csv", dir / "nope.csv"), DataError);
    }
    fs::remove_all(dir);
}

TEST_CASE("signal csv must have 12 columns", "[dataset]") {
    const fs::path dir = fresh_dir("badsignal");
    std::ofstream sf(dir / "x.csv");
    sf << "1,2,3\n";
    sf.close();
    REQUIRE_THROWS_AS(read_signal_csv(dir / "x.csv"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("labels csv parser", "[dataset]") {
    const fs::path dir = fresh_dir("labels");
    {
        std::ofstream lf(dir / "labels.csv");
        lf << "id,labels\n";
        lf << "a,AF|PVC\n";
        lf << "b,\n";
        lf << "c,Normal\n";
    }
    auto rows = read_labels_csv(dir / "labels.csv");
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0].first == "a");
    REQUIRE(rows[0].second.to_string() == "AF|PVC");
    REQUIRE(rows[1].second.empty());
    REQUIRE(rows[2].second.test(0));

    {
        std::ofstream lf(dir / "dup.csv");
        lf << "id,labels\na,AF\na,PVC\n";
    }
    REQUIRE_THROWS_AS(read_labels_csv(dir / "dup.csv"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("fold split sizes are as even as possible", "[dataset]") {
    Rng rng(31);
    Dataset ds = random_dataset(23, rng);
    FoldAssignment fa = split_folds(ds, 10, 99);
    REQUIRE(fa.num_folds == 10);

    auto sizes = fa.fold_sizes();
    std::sort(sizes.begin(), sizes.end());
    // 23 = 7*2 + 3*3
    std::vector<std::size_t> want = {2, 2, 2, 2, 2, 2, 2, 3, 3, 3};
    REQUIRE(sizes == want);
}

TEST_CASE("fold split depends only on the id set and seed", "[dataset]") {
    Rng rng(5);
    Dataset ds = random_dataset(15, rng);
    FoldAssignment a = split_folds(ds, 5, 1234);

    // permute record order; the assignment must not change
    Dataset shuffled = ds;
    std::reverse(shuffled.records.begin(), shuffled.records.end());
    FoldAssignment b = split_folds(shuffled, 5, 1234);
    REQUIRE(a.fold_of == b.fold_of);

    FoldAssignment c = split_folds(ds, 5, 1235);
    REQUIRE(a.fold_of != c.fold_of);
}

TEST_CASE("replica ids resolve to their base fold", "[dataset]") {
    Rng rng(6);
    Dataset ds = random_dataset(8, rng);
    FoldAssignment fa = split_folds(ds, 4, 7);
    for (const auto& r : ds.records) {
        const std::string& id = r.recording.id;
        REQUIRE(fa.fold(id + "#1") == fa.fold(id));
        REQUIRE(fa.fold(id + "#12") == fa.fold(id));
    }
    REQUIRE_THROWS_AS(fa.fold("unknown"), DataError);
}

TEST_CASE("fold split rejects bad k", "[dataset]") {
    Rng rng(9);
    Dataset ds = random_dataset(5, rng);
    REQUIRE_THROWS_AS(split_folds(ds, 1, 0), ConfigError);
    REQUIRE_THROWS_AS(split_folds(ds, 6, 0), ConfigError);
    Dataset empty;
    REQUIRE_THROWS_AS(split_folds(empty, 2, 0), DataError);
}

TEST_CASE("class_counts tallies multi-label records per class", "[dataset]") {
    Dataset ds;
    auto add = [&](const std::string& id, const std::string& labels) {
        EcgRecording r;
        r.id = id;
        r.fs = 100.0;
        r.leads.assign(kNumLeads, std::vector<double>(10, 0.0));
        ds.records.push_back({std::move(r), LabelSet::parse(labels)});
    };
    add("a", "AF");
    add("b", "AF|PVC");
    add("c", "Normal");
    auto counts = ds.class_counts();
    REQUIRE(counts[0] == 1);
    REQUIRE(counts[1] == 2);
    REQUIRE(counts[5] == 1);
    REQUIRE(counts[8] == 0);
}
