#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rjmf {

/// One observed rating. Ids are zero-based and dense.
struct RatingTriple {
    std::uint32_t user;
    std::uint32_t item;
    double rating;
};

/// Sparse rating matrix with per-user and per-item entry indexes.
/// Entries are sorted by (user, item) and free of duplicates. The id
/// space [0,n) x [0,p) may be larger than the set of ids that actually
/// occur, so rows or columns can be empty.
struct SparseRatings {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<RatingTriple> entries;
    std::vector<std::vector<std::uint32_t>> by_user;
    std::vector<std::vector<std::uint32_t>> by_item;
};

struct DataSplit {
    SparseRatings train;
    SparseRatings test;
};

/// Builds index structures from a triple list. Sorts, validates ranges
/// and rejects duplicate (user, item) pairs.
inline SparseRatings make_sparse(std::size_t n, std::size_t p,
                                 std::vector<RatingTriple> entries) {
    if (n == 0 || p == 0) {
        throw std::invalid_argument("make_sparse: empty id space");
    }
    std::sort(entries.begin(), entries.end(), [](const RatingTriple& a, const RatingTriple& b) {
        return a.user != b.user ? a.user < b.user : a.item < b.item;
    });
    SparseRatings r;
    r.n = n;
    r.p = p;
    r.by_user.resize(n);
    r.by_item.resize(p);
    for (std::size_t e = 0; e < entries.size(); e++) {
        const RatingTriple& t = entries[e];
        if (t.user >= n || t.item >= p) {
            throw std::invalid_argument("make_sparse: id out of range");
        }
        if (e > 0 && entries[e - 1].user == t.user && entries[e - 1].item == t.item) {
            throw std::invalid_argument("make_sparse: duplicate entry for user " +
                                        std::to_string(t.user + 1) + ", item " +
                                        std::to_string(t.item + 1));
        }
        r.by_user[t.user].push_back(static_cast<std::uint32_t>(e));
        r.by_item[t.item].push_back(static_cast<std::uint32_t>(e));
    }
    r.entries = std::move(entries);
    return r;
}

/// Parses a tab-separated ratings file in the MovieLens u.data layout:
/// user id, item id, rating, optional timestamp (ignored). Ids are
/// one-based in the file, ratings must lie in [1,5]. Blank lines are
/// skipped; anything else malformed raises an error naming the line.
inline SparseRatings parse_movielens(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("parse_movielens: cannot open " + path);
    }
    std::vector<RatingTriple> entries;
    std::uint32_t max_user = 0;
    std::uint32_t max_item = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::istringstream ls(line);
        long long user = 0;
        long long item = 0;
        double rating = 0.0;
        long long timestamp = 0;
        const auto fail = [&](const char* what) {
            throw std::runtime_error("parse_movielens: " + std::string(what) + " at line " +
                                     std::to_string(lineno) + " of " + path);
        };
        if (!(ls >> user >> item >> rating)) {
            fail("malformed record");
        }
        ls >> timestamp;  // absent in three-column files
        std::string extra;
        if (ls >> extra) {
            fail("trailing fields");
        }
        if (user < 1 || item < 1) {
            fail("non-positive id");
        }
        if (!(rating >= 1.0 && rating <= 5.0)) {
            fail("rating outside [1,5]");
        }
        const auto u = static_cast<std::uint32_t>(user - 1);
        const auto i = static_cast<std::uint32_t>(item - 1);
        entries.push_back({u, i, rating});
        max_user = std::max(max_user, u);
        max_item = std::max(max_item, i);
    }
    if (entries.empty()) {
        throw std::runtime_error("parse_movielens: no ratings in " + path);
    }
    return make_sparse(max_user + 1, max_item + 1, std::move(entries));
}

/// Splits entries into train and test by a seeded Fisher-Yates shuffle.
/// The procedure is fixed so other implementations can reproduce it:
/// shuffle indices 0..N-1 with j = rng() % (i+1) for i = N-1..1 using
/// std::mt19937_64(seed), then take the first ceil(fraction * N) as
/// train. Both halves keep the full (n, p) id space.
inline DataSplit split(const SparseRatings& r, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("split: fraction must lie in (0, 1]");
    }
    const std::size_t total = r.entries.size();
    if (total == 0) {
        throw std::invalid_argument("split: no entries");
    }
    std::vector<std::uint32_t> order(total);
    for (std::size_t i = 0; i < total; i++) {
        order[i] = static_cast<std::uint32_t>(i);
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = total - 1; i >= 1; i--) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    const auto want = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(total)));
    const std::size_t ntrain = std::min(want, total);
    std::vector<RatingTriple> train_entries;
    std::vector<RatingTriple> test_entries;
    train_entries.reserve(ntrain);
    test_entries.reserve(total - ntrain);
    for (std::size_t i = 0; i < total; i++) {
        (i < ntrain ? train_entries : test_entries).push_back(r.entries[order[i]]);
    }
    DataSplit s;
    s.train = make_sparse(r.n, r.p, std::move(train_entries));
    s.test = make_sparse(r.n, r.p, std::move(test_entries));
    return s;
}

/// Root mean squared error over parallel spans.
inline double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) {
        throw std::invalid_argument("rmse: length mismatch");
    }
    if (predicted.empty()) {
        throw std::invalid_argument("rmse: empty input");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < predicted.size(); i++) {
        const double d = predicted[i] - actual[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(predicted.size()));
}

}  // namespace rjmf
