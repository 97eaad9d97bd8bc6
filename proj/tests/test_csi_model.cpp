// SPDX-License-Identifier: Apache-2.0
//
// csiloc - instantaneous multi-person indoor localization from WiFi CSI
// Copyright (C) 2026 The csiloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include "csiloc/channel_sim.hpp"
#include "csiloc/csi_model.hpp"
#include "test_support.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

using namespace csiloc;

static CsiRecording small_recording(std::size_t frames, std::size_t A = 4, std::size_t S = 64)
{
    CsiRecording rec;
    for (std::size_t i = 0; i < frames; ++i)
    {
        CsiFrame f(A, S);
        for (std::size_t k = 0; k < f.values.size(); ++k)
            f.values[k] = {float(i) + 0.25f * float(k), -0.5f * float(k)};
        f.timestamp_us = 20000 * i;
        rec.frames.push_back(f);
        rec.labels.push_back(OccupancyLabel(rec.grid.cell_count(), {i % rec.grid.cell_count()}));
    }
    return rec;
}

static std::string to_bytes(const CsiRecording &rec)
{
    std::ostringstream s;
    write_dataset(rec, s);
    return s.str();
}

// ================================================================================================
// OccupancyLabel
// ================================================================================================

TEST_CASE("OccupancyLabel - set, test, count")
{
    OccupancyLabel l(12, {0, 5, 11});
    CHECK(l.count() == 3);
    CHECK(l.test(5));
    CHECK_FALSE(l.test(4));
    CHECK(l.occupied() == std::vector<std::size_t>{0, 5, 11});
    CHECK(l.to_string() == "{0,5,11}");
    l.set(5, false);
    CHECK(l.count() == 2);
    CHECK_THROWS_AS(l.set(12), std::out_of_range);
}

TEST_CASE("OccupancyLabel - grids wider than 64 cells use extra words")
{
    OccupancyLabel l(130, {0, 64, 129});
    CHECK(l.words().size() == 3);
    CHECK(OccupancyLabel::from_words(130, l.words()) == l);
    CHECK_THROWS_AS(OccupancyLabel::from_words(12, {std::uint64_t(1) << 12}), std::invalid_argument);
}

TEST_CASE("LocationGrid - cell centres")
{
    LocationGrid g;
    const Vec3 c = g.cell_center(5, 1.0);
    CHECK(c[0] == Catch::Approx(1.5 * 0.6));
    CHECK(c[1] == Catch::Approx(1.5 * 0.6));
    CHECK(c[2] == 1.0);
    CHECK_THROWS_AS(g.cell_center(12, 1.0), std::out_of_range);
}

// ================================================================================================
// Validation
// ================================================================================================

TEST_CASE("validate - rejects broken invariants")
{
    CsiRecording rec = small_recording(3);
    REQUIRE_NOTHROW(validate(rec));

    auto expect_invariant = [](const CsiRecording &r) {
        try
        {
            validate(r);
            FAIL("no error");
        }
        catch (const DatasetError &e)
        {
            CHECK(e.code() == DatasetErrorCode::invariant);
        }
    };

    auto r1 = rec;
    r1.frames[1].values[3] = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    expect_invariant(r1);
    auto r2 = rec;
    r2.frames[2].timestamp_us = r2.frames[1].timestamp_us;
    expect_invariant(r2);
    auto r3 = rec;
    r3.labels.pop_back();
    expect_invariant(r3);
    auto r4 = small_recording(2, 1, 64);
    expect_invariant(r4);
    auto r5 = small_recording(2, 4, 7);
    expect_invariant(r5);
    auto r6 = rec;
    r6.grid.rx_pos = r6.grid.tx_pos;
    expect_invariant(r6);
    auto r7 = rec;
    r7.frames[1] = CsiFrame(4, 32);
    r7.frames[1].timestamp_us = 20000;
    expect_invariant(r7);
}

TEST_CASE("validate_occupancy - max occupants")
{
    CsiRecording rec = small_recording(2);
    rec.labels[1] = OccupancyLabel(12, {1, 2, 3, 4});
    CHECK_NOTHROW(validate_occupancy(rec, 4));
    CHECK_THROWS_AS(validate_occupancy(rec, 3), DatasetError);
}

TEST_CASE("contiguous_runs - split on label and session changes")
{
    CsiRecording rec = small_recording(6);
    for (auto &l : rec.labels)
        l = OccupancyLabel(12, {1});
    rec.labels[3] = OccupancyLabel(12, {2});
    rec.frames[5].boot_session = 1;
    const auto runs = contiguous_runs(rec);
    REQUIRE(runs.size() == 4);
    CHECK(runs[0].first == 0);
    CHECK(runs[0].last == 3);
    CHECK(runs[1].first == 3);
    CHECK(runs[2].first == 4);
    CHECK(runs[3].first == 5);
    CHECK(is_uniformly_sampled(rec, 0, 6));
    rec.frames[5].timestamp_us += 1000;
    CHECK_FALSE(is_uniformly_sampled(rec, 0, 6));
}

// ================================================================================================
// CSID format
// ================================================================================================

TEST_CASE("CSID - empty recording writes a header-only file")
{
    CsiRecording rec;
    rec.empty_antennas = 4;
    rec.empty_subcarriers = 64;
    const std::string bytes = to_bytes(rec);
    CHECK(bytes.size() == 4 + 2 * 5 + 8 * 4 + 8 * 6 + 8);
    std::istringstream in(bytes);
    const CsiRecording back = read_dataset(in);
    CHECK(back.frames.empty());
    CHECK(back == rec);
}

TEST_CASE("CSID - 550-frame roundtrip is exact")
{
    ScenarioConfig s = csiloc::test::default_scenario(5);
    const CsiRecording rec = render_recording(s, draw_boot_session(s, 0), OccupancyLabel(12, {3, 7}), 550, 50.0);
    const std::string bytes = to_bytes(rec);
    CHECK(bytes.size() == 102 + 550 * (8 + 4 + 8 + 4 * 64 * 8));
    std::istringstream in(bytes);
    const CsiRecording back = read_dataset(in);
    CHECK(back == rec);
    CHECK(to_bytes(back) == bytes);
}

TEST_CASE("CSID - header layout is little-endian")
{
    const CsiRecording rec = small_recording(1, 2, 8);
    const std::string b = to_bytes(rec);
    CHECK(b.substr(0, 4) == "CSID");
    CHECK(std::uint8_t(b[4]) == 1);
    CHECK(std::uint8_t(b[5]) == 0);
    CHECK(std::uint8_t(b[6]) == 2);
    CHECK(std::uint8_t(b[8]) == 8);
    CHECK(std::uint8_t(b[10]) == 3);
    CHECK(std::uint8_t(b[12]) == 4);
    CHECK(std::uint8_t(b[94]) == 1);
}

TEST_CASE("CSID - NaN payload is rejected before any byte is written")
{
    CsiRecording rec = small_recording(2);
    rec.frames[0].values[0] = {0.0f, std::numeric_limits<float>::infinity()};
    std::ostringstream s;
    CHECK_THROWS_AS(write_dataset(rec, s), DatasetError);
    CHECK(s.str().empty());
}

TEST_CASE("CSID - distinct read errors")
{
    const std::string good = to_bytes(small_recording(3));
    auto code_of = [](const std::string &bytes) {
        std::istringstream in(bytes);
        try
        {
            read_dataset(in);
        }
        catch (const DatasetError &e)
        {
            return e.code();
        }
        return DatasetErrorCode::io;
    };
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK(code_of(bad_magic) == DatasetErrorCode::bad_magic);
    std::string bad_version = good;
    bad_version[4] = 2;
    CHECK(code_of(bad_version) == DatasetErrorCode::version_mismatch);
    CHECK(code_of(good.substr(0, 102)) == DatasetErrorCode::truncated);
    CHECK(code_of(good.substr(0, good.size() - 1)) == DatasetErrorCode::truncated);
    CHECK(code_of(good.substr(0, 50)) == DatasetErrorCode::truncated);
    std::string bad_label = good;
    bad_label[102 + 8 + 4 + 1] = char(0x40); // bit 14 of a 12-cell label
    CHECK(code_of(bad_label) == DatasetErrorCode::label_count_mismatch);
    CHECK(code_of(good) == DatasetErrorCode::io);
}

TEST_CASE("CSID - file roundtrip")
{
    const auto dir = csiloc::test::temp_dir("csid");
    const CsiRecording rec = small_recording(5);
    const std::size_t n = write_dataset_file(rec, dir / "a.csid");
    CHECK(std::filesystem::file_size(dir / "a.csid") == n);
    CHECK(read_dataset_file(dir / "a.csid") == rec);
    CHECK_THROWS_AS(read_dataset_file(dir / "missing.csid"), DatasetError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("CSID - property roundtrip on random recordings")
{
    std::mt19937_64 rng(77);
    for (int i = 0; i < 200; ++i)
    {
        const CsiRecording rec = csiloc::test::random_recording(rng);
        const std::string bytes = to_bytes(rec);
        std::istringstream in(bytes);
        const CsiRecording back = read_dataset(in);
        REQUIRE(back == rec);
        REQUIRE(to_bytes(back) == bytes);
    }
}

// ================================================================================================
// Splitting
// ================================================================================================

static CsiRecording labelled(std::size_t labels, std::size_t per_label)
{
    CsiRecording rec;
    std::uint64_t ts = 0;
    for (std::size_t l = 0; l < labels; ++l)
        for (std::size_t i = 0; i < per_label; ++i)
        {
            CsiFrame f(2, 8);
            f.values[0] = {float(l), float(i)};
            f.timestamp_us = ts += 20000;
            rec.frames.push_back(f);
            rec.labels.push_back(OccupancyLabel(12, {l}));
        }
    return rec;
}

TEST_CASE("split_dataset - (1,0,0) returns the input as train")
{
    const CsiRecording rec = labelled(3, 10);
    const SplitResult s = split_dataset(rec, {1.0, 0.0, 0.0}, 1);
    CHECK(s.train == rec);
    CHECK(s.val.frames.empty());
    CHECK(s.test.frames.empty());
    CHECK(s.warnings.empty());
}

TEST_CASE("split_dataset - 1% of 550 frames per label gives 5 or 6 train frames")
{
    const CsiRecording rec = labelled(12, 550);
    const SplitResult s = split_dataset(rec, {0.01, 0.0, 0.99}, 3);
    std::map<OccupancyLabel, std::size_t> counts;
    for (const auto &l : s.train.labels)
        ++counts[l];
    CHECK(counts.size() == 12);
    for (const auto &[l, n] : counts)
        CHECK((n == 5 || n == 6));
    CHECK(s.train.frames.size() + s.test.frames.size() == rec.frames.size());
}

TEST_CASE("split_dataset - disjoint, exhaustive, deterministic, stratified")
{
    const CsiRecording rec = labelled(5, 37);
    const SplitResult a = split_dataset(rec, {0.5, 0.25, 0.25}, 9);
    const SplitResult b = split_dataset(rec, {0.5, 0.25, 0.25}, 9);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    std::set<std::uint64_t> seen;
    for (const auto *part : {&a.train, &a.val, &a.test})
        for (const auto &f : part->frames)
            CHECK(seen.insert(f.timestamp_us).second);
    CHECK(seen.size() == rec.frames.size());

    std::set<OccupancyLabel> train_labels(a.train.labels.begin(), a.train.labels.end());
    CHECK(train_labels.size() == 5);
    for (const auto *part : {&a.train, &a.val, &a.test})
        for (std::size_t i = 1; i < part->frames.size(); ++i)
            CHECK(part->frames[i].timestamp_us > part->frames[i - 1].timestamp_us);

    const SplitResult c = split_dataset(rec, {0.5, 0.25, 0.25}, 10);
    CHECK_FALSE(c.train == a.train);
}

TEST_CASE("split_dataset - at least one train frame, warnings when no train fraction")
{
    const CsiRecording rec = labelled(2, 3);
    const SplitResult s = split_dataset(rec, {0.01, 0.0, 0.99}, 1);
    CHECK(s.train.frames.size() == 2);
    const SplitResult w = split_dataset(rec, {0.0, 0.5, 0.5}, 1);
    CHECK(w.train.frames.empty());
    CHECK(w.warnings.size() == 2);
    CHECK_THROWS_AS(split_dataset(rec, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_dataset(rec, {1.5, -0.5, 0.0}, 1), std::invalid_argument);
}
