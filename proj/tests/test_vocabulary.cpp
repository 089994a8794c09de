#include <doctest.h>

#include <cstdio>
#include <map>
#include <set>

#include "core/error.hpp"

#include "core/vocabulary.hpp"

using namespace mmtc;

TEST_CASE("vocabulary sizes by section layout") {
  // pad(1) + structural + 64 beats + 12 positions + 128 pitches + 192 durations
  // [+ 64 instruments][+ 20 tags]
  CHECK(Vocabulary::build(false, false).size() == 400); // 1+3+396
  CHECK(Vocabulary::build(false, true).size() == 465);  // 1+4+396+64
  CHECK(Vocabulary::build(true, false).size() == 421);  // 1+4+396+20
  CHECK(Vocabulary::build(true, true).size() == 486);   // 1+5+396+64+20
}

TEST_CASE("full vocabulary counts per kind match the layout arithmetic") {
  const auto vocab = Vocabulary::build(true, true);
  std::map<EventKind, int> counts;
  for (const auto& e : vocab.entries()) ++counts[e.kind];
  CHECK(counts[EventKind::pad] == 1);
  CHECK(counts[EventKind::start_of_song] == 1);
  CHECK(counts[EventKind::start_of_tags] == 1);
  CHECK(counts[EventKind::start_of_program] == 1);
  CHECK(counts[EventKind::start_of_notes] == 1);
  CHECK(counts[EventKind::end_of_song] == 1);
  CHECK(counts[EventKind::beat] == 64);
  CHECK(counts[EventKind::position] == 12);
  CHECK(counts[EventKind::pitch] == 128);
  CHECK(counts[EventKind::duration] == 192);
  CHECK(counts[EventKind::instrument] == 64);
  CHECK(counts[EventKind::tag] == 20);
}

TEST_CASE("section membership follows the include flags") {
  const auto vocab = Vocabulary::build(false, true);
  CHECK(vocab.contains({EventKind::start_of_program, 0}));
  CHECK_FALSE(vocab.contains({EventKind::start_of_tags, 0}));
  CHECK(vocab.contains({EventKind::instrument, 63}));
  CHECK_FALSE(vocab.contains({EventKind::tag, 0}));
}

TEST_CASE("ids are dense and round trip through the index") {
  for (bool tags : {false, true}) {
    for (bool instruments : {false, true}) {
      const auto vocab = Vocabulary::build(tags, instruments);
      CHECK(vocab.event_of(Vocabulary::pad_id) == Event{EventKind::pad, 0});
      for (size_t id = 0; id < vocab.size(); ++id) {
        CHECK(vocab.id_of(vocab.event_of(static_cast<int>(id))) == static_cast<int>(id));
      }
    }
  }
}

TEST_CASE("equal arguments give equal fingerprints, different layouts differ") {
  const auto a = Vocabulary::build(true, true);
  const auto b = Vocabulary::build(true, true);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != Vocabulary::build(false, true).fingerprint());
  CHECK(a.fingerprint() != Vocabulary::build(false, false).fingerprint());
}

TEST_CASE("extend_vocab maps events by value") {
  const auto base = Vocabulary::build(false, false);
  const auto target = Vocabulary::build(true, true);
  const auto map = extend_vocab(base, target);

  // Exactly the tag/instrument events and their two markers are new.
  size_t expected_new = 20 + 64 + 2;
  CHECK(map.num_new == expected_new);
  for (size_t id = 0; id < target.size(); ++id) {
    const Event& e = target.entries()[id];
    const bool is_new = map.base_id_of_target[id] < 0;
    const bool should_be_new =
        e.kind == EventKind::tag || e.kind == EventKind::instrument ||
        e.kind == EventKind::start_of_tags || e.kind == EventKind::start_of_program;
    CHECK(is_new == should_be_new);
    if (!is_new) {
      CHECK(base.entries()[map.base_id_of_target[id]] == e);
    }
  }

  // Shared mapping is injective.
  std::set<int> seen;
  for (int base_id : map.base_id_of_target) {
    if (base_id < 0) continue;
    CHECK(seen.insert(base_id).second);
  }
}

TEST_CASE("extend_vocab with identical vocabularies is the identity") {
  const auto v = Vocabulary::build(true, true);
  const auto map = extend_vocab(v, v);
  CHECK(map.num_new == 0);
  for (size_t id = 0; id < v.size(); ++id) {
    CHECK(map.base_id_of_target[id] == static_cast<int>(id));
  }
}

TEST_CASE("vocabulary shrink is rejected") {
  const auto base = Vocabulary::build(true, true);
  const auto target = Vocabulary::build(false, true);
  CHECK_THROWS_WITH_AS(extend_vocab(base, target),
                       doctest::Contains("vocabulary shrink not supported"), Error);
}

TEST_CASE("vocabulary text file round trips") {
  const auto vocab = Vocabulary::build(true, true);
  const std::string path = "vocab_roundtrip_test.txt";
  vocab.save(path);
  const auto loaded = Vocabulary::load(path);
  CHECK(loaded.size() == vocab.size());
  CHECK(loaded.fingerprint() == vocab.fingerprint());
  CHECK(loaded.entries() == vocab.entries());
  std::remove(path.c_str());
}
