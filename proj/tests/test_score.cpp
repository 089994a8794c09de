#include <doctest.h>

#include <set>

#include "core/score.hpp"
#include "helpers.hpp"

using namespace mmtc;

TEST_CASE("notes beyond beat 63 are dropped and counted") {
  Song song;
  song.tracks.push_back({0, false, {{770, 60, 12, 64}, {0, 60, 12, 64}}});
  const auto report = quantize_and_sort(song);
  CHECK(report.dropped_notes == 1);
  REQUIRE(song.tracks.size() == 1);
  REQUIRE(song.tracks[0].notes.size() == 1);
  CHECK(song.tracks[0].notes[0].onset == 0);
}

TEST_CASE("notes are sorted by onset, pitch, duration") {
  Song song;
  song.tracks.push_back({0, false, {{12, 64, 6, 64}, {0, 60, 12, 64}}});
  quantize_and_sort(song);
  CHECK(song.tracks[0].notes[0].onset == 0);
  CHECK(song.tracks[0].notes[0].pitch == 60);
  CHECK(song.tracks[0].notes[1].onset == 12);
  CHECK(song.tracks[0].notes[1].pitch == 64);
}

TEST_CASE("durations clip to [1, 192]") {
  Song song;
  song.tracks.push_back({0, false, {{0, 60, 500, 64}, {12, 61, 0, 64}}});
  const auto report = quantize_and_sort(song);
  CHECK(report.clipped_durations == 2);
  CHECK(song.tracks[0].notes[0].duration == 192);
  CHECK(song.tracks[0].notes[1].duration == 1);
}

TEST_CASE("tracks with the same program merge; empty tracks vanish") {
  Song song;
  song.tracks.push_back({5, false, {{12, 70, 6, 64}}});
  song.tracks.push_back({2, false, {{0, 60, 6, 64}}});
  song.tracks.push_back({5, false, {{0, 50, 6, 64}}});
  song.tracks.push_back({9, false, {}});
  quantize_and_sort(song);
  REQUIRE(song.tracks.size() == 2);
  CHECK(song.tracks[0].program == 2);
  CHECK(song.tracks[1].program == 5);
  REQUIRE(song.tracks[1].notes.size() == 2);
  CHECK(song.tracks[1].notes[0].pitch == 50);
}

TEST_CASE("quantize_and_sort is idempotent and preserves pitch/velocity") {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    testing::SongOptions opt;
    opt.codec_velocity = false;
    opt.with_tags = trial % 2 == 0;
    Song song = testing::random_song(rng, opt);

    std::multiset<std::pair<int, int>> before; // (pitch, velocity) of surviving notes
    for (const auto& t : song.tracks) {
      for (const auto& n : t.notes) {
        if (n.onset >= 0 && n.onset / kResolution < kMaxBeats) {
          before.insert({n.pitch, n.velocity});
        }
      }
    }

    Song once = quantized_and_sorted(song);
    Song twice = quantized_and_sorted(once);
    CHECK(once == twice);

    std::multiset<std::pair<int, int>> after;
    for (const auto& t : once.tracks) {
      for (const auto& n : t.notes) after.insert({n.pitch, n.velocity});
    }
    CHECK(before == after);

    for (const auto& t : once.tracks) {
      for (const auto& n : t.notes) {
        CHECK(n.onset / kResolution >= 0);
        CHECK(n.onset / kResolution < kMaxBeats);
        CHECK(n.duration >= 1);
        CHECK(n.duration <= kMaxDuration);
      }
    }
  }
}

TEST_CASE("validate_song reports out-of-range fields") {
  Song song;
  song.tracks.push_back({0, false, {{0, 60, 12, 64}, {0, 61, 12, 64},
                                    {0, 62, 12, 64}, {0, 128, 12, 64}}});
  auto violations = validate_song(song);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == "pitch out of range at track 0 note 3: 128");

  song.tracks[0].notes[3].pitch = 64;
  CHECK(validate_song(song).empty());

  song.tracks.push_back({64, false, {}});
  violations = validate_song(song);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("program out of range") == 0);
}

TEST_CASE("validate_song checks tag/metadata consistency") {
  Song song;
  song.genre_tags = {3};
  song.has_metadata = false;
  const auto violations = validate_song(song);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("has_metadata") != std::string::npos);
}

TEST_CASE("builtin tables map programs and genres") {
  const auto& tables = CanonicalTables::builtin();
  CHECK(tables.instruments().size() == 64);
  CHECK(tables.genres().size() == 20);
  CHECK(tables.map_program(0, false) == 0);
  CHECK(tables.map_program(1, false) == 0);
  CHECK(tables.map_program(40, false) == 20); // violin
  CHECK(tables.map_program(5, true) == 63);   // drums collapse regardless of program
  CHECK(tables.map_program(126, false) == -1);
  CHECK(tables.map_program(127, false) == -1);
  CHECK(tables.instrument(63).is_drum);
  CHECK(tables.map_genre("Classical") == 0);
  CHECK(tables.map_genre("polka") == -1);
  // Export representative maps back to itself.
  for (int c = 0; c < 63; ++c) {
    const auto& inst = tables.instrument(c);
    CHECK(tables.map_program(inst.midi_program, inst.is_drum) == c);
  }
}
