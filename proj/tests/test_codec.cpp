#include <doctest.h>

#include <map>

#include "core/codec.hpp"
#include "core/error.hpp"
#include "helpers.hpp"

using namespace mmtc;

namespace {

Song two_note_song() {
  Song song;
  song.tracks.push_back({0, false, {{0, 60, 12, 64}, {12, 64, 6, 64}}});
  return song;
}

std::vector<Event> expected_body() {
  return {{EventKind::beat, 0},     {EventKind::position, 0}, {EventKind::instrument, 0},
          {EventKind::pitch, 60},   {EventKind::duration, 12},
          {EventKind::beat, 1},     {EventKind::position, 0}, {EventKind::instrument, 0},
          {EventKind::pitch, 64},   {EventKind::duration, 6}};
}

} // namespace

TEST_CASE("mmt-i encoding matches the hand expansion") {
  const auto events = encode(two_note_song(), Variant::mmt_i);
  std::vector<Event> expected = {{EventKind::start_of_song, 0},
                                 {EventKind::start_of_program, 0},
                                 {EventKind::instrument, 0},
                                 {EventKind::start_of_notes, 0}};
  for (const auto& e : expected_body()) expected.push_back(e);
  expected.push_back({EventKind::end_of_song, 0});
  CHECK(events == expected);
}

TEST_CASE("mmt-gi puts the tag list ahead of the instrument list") {
  Song song = two_note_song();
  song.genre_tags = {3};
  song.has_metadata = true;
  const auto events = encode(song, Variant::mmt_gi);
  std::vector<Event> expected = {{EventKind::start_of_song, 0},
                                 {EventKind::start_of_tags, 0},
                                 {EventKind::tag, 3},
                                 {EventKind::start_of_program, 0},
                                 {EventKind::instrument, 0},
                                 {EventKind::start_of_notes, 0}};
  for (const auto& e : expected_body()) expected.push_back(e);
  expected.push_back({EventKind::end_of_song, 0});
  CHECK(events == expected);
}

TEST_CASE("uncond note groups still carry the instrument token") {
  const auto events = encode(two_note_song(), Variant::uncond);
  REQUIRE(events.size() == 13); // SOS + 2*5 + SON + EOS
  CHECK(events[0] == Event{EventKind::start_of_song, 0});
  CHECK(events[1] == Event{EventKind::start_of_notes, 0});
  CHECK(events[4] == Event{EventKind::instrument, 0});
  CHECK(events.back() == Event{EventKind::end_of_song, 0});
}

TEST_CASE("empty song encodings") {
  Song empty;
  CHECK(encode(empty, Variant::uncond) ==
        std::vector<Event>{{EventKind::start_of_song, 0},
                           {EventKind::start_of_notes, 0},
                           {EventKind::end_of_song, 0}});
  // An empty instrument list is grammatical under mmt-i.
  const auto events = encode(empty, Variant::mmt_i);
  CHECK(events.size() == 4);
  CHECK(decode(events, Variant::mmt_i).tracks.empty());
}

TEST_CASE("encoding a tagless song under genre variants fails") {
  CHECK_THROWS_WITH_AS(encode(two_note_song(), Variant::mmt_g),
                       doctest::Contains("missing genre condition"), Error);
  CHECK_THROWS_WITH_AS(encode(two_note_song(), Variant::mmt_gi),
                       doctest::Contains("missing genre condition"), Error);
}

TEST_CASE("decode rejects a pitch right after start-of-notes") {
  const std::vector<Event> events = {{EventKind::start_of_song, 0},
                                     {EventKind::start_of_notes, 0},
                                     {EventKind::pitch, 60}};
  CHECK_THROWS_WITH_AS(decode(events, Variant::uncond),
                       doctest::Contains("index 2"), Error);
  try {
    decode(events, Variant::uncond);
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("beat") != std::string::npos);
    CHECK(what.find("end-of-song") != std::string::npos);
  }
}

TEST_CASE("tag after start-of-notes is rejected by name") {
  Song song = two_note_song();
  song.genre_tags = {1};
  song.has_metadata = true;
  auto events = encode(song, Variant::mmt_g);
  events.insert(events.begin() + 5, {EventKind::tag, 2}); // right after SON
  CHECK_THROWS_WITH_AS(decode(events, Variant::mmt_g),
                       doctest::Contains("tag outside tag section"), Error);
}

TEST_CASE("advance walks the mmt-g prefix") {
  GrammarState s = initial_state();
  auto step = advance(s, {EventKind::start_of_song, 0}, Variant::mmt_g);
  REQUIRE(step.accepted);
  s = step.next;
  // Only start-of-tags is allowed after start-of-song under mmt-g.
  CHECK_FALSE(accepts(s, {EventKind::tag, 0}, Variant::mmt_g));
  CHECK_FALSE(accepts(s, {EventKind::start_of_notes, 0}, Variant::mmt_g));
  CHECK(accepts(s, {EventKind::start_of_tags, 0}, Variant::mmt_g));
  s = advance(s, {EventKind::start_of_tags, 0}, Variant::mmt_g).next;
  // At least one tag before start-of-notes.
  CHECK_FALSE(accepts(s, {EventKind::start_of_notes, 0}, Variant::mmt_g));
  s = advance(s, {EventKind::tag, 4}, Variant::mmt_g).next;
  CHECK(accepts(s, {EventKind::start_of_notes, 0}, Variant::mmt_g));
  CHECK(((s.declared_tags >> 4) & 1) == 1);
}

TEST_CASE("note field cycle and beat monotonicity") {
  GrammarState s = initial_state();
  for (const Event& e : encode(two_note_song(), Variant::uncond)) {
    if (e.kind == EventKind::end_of_song) break;
    s = advance(s, e, Variant::uncond).next;
  }
  CHECK(s.last_beat == 1);
  // in-note(pitch) -> in-note(duration)
  s = advance(s, {EventKind::beat, 5}, Variant::uncond).next;
  s = advance(s, {EventKind::position, 3}, Variant::uncond).next;
  s = advance(s, {EventKind::instrument, 7}, Variant::uncond).next;
  CHECK(s.next_field == GrammarState::NoteField::pitch);
  s = advance(s, {EventKind::pitch, 60}, Variant::uncond).next;
  CHECK(s.next_field == GrammarState::NoteField::duration);
  s = advance(s, {EventKind::duration, 8}, Variant::uncond).next;
  // last_beat is now 5: beat(3) must be rejected.
  CHECK(s.last_beat == 5);
  const auto rejected = advance(s, {EventKind::beat, 3}, Variant::uncond);
  CHECK_FALSE(rejected.accepted);
  CHECK(accepts(s, {EventKind::beat, 5}, Variant::uncond));
}

TEST_CASE("allowed_mask after start-of-notes is exactly beats plus end-of-song") {
  const auto vocab = variant_vocab(Variant::uncond);
  GrammarState s = initial_state();
  s = advance(s, {EventKind::start_of_song, 0}, Variant::uncond).next;
  s = advance(s, {EventKind::start_of_notes, 0}, Variant::uncond).next;
  const auto mask = allowed_mask(s, vocab, Variant::uncond, false);
  size_t allowed = 0;
  for (size_t id = 0; id < vocab.size(); ++id) {
    if (!mask[id]) continue;
    ++allowed;
    const auto kind = vocab.entries()[id].kind;
    CHECK((kind == EventKind::beat || kind == EventKind::end_of_song));
  }
  CHECK(allowed == 65);
  CHECK_FALSE(mask[Vocabulary::pad_id]);
}

TEST_CASE("enforced instrument slots restrict to the declared programs") {
  const auto vocab = variant_vocab(Variant::mmt_i);
  GrammarState s = initial_state();
  for (const Event& e : {Event{EventKind::start_of_song, 0},
                         Event{EventKind::start_of_program, 0},
                         Event{EventKind::instrument, 0},
                         Event{EventKind::instrument, 40},
                         Event{EventKind::start_of_notes, 0},
                         Event{EventKind::beat, 0},
                         Event{EventKind::position, 0}}) {
    s = advance(s, e, Variant::mmt_i).next;
  }
  REQUIRE(s.next_field == GrammarState::NoteField::instrument);
  const auto enforced = allowed_mask(s, vocab, Variant::mmt_i, true);
  size_t allowed = 0;
  for (size_t id = 0; id < vocab.size(); ++id) allowed += enforced[id] ? 1 : 0;
  CHECK(allowed == 2);
  CHECK(enforced[vocab.id_of({EventKind::instrument, 0})]);
  CHECK(enforced[vocab.id_of({EventKind::instrument, 40})]);
  // Without enforcement every instrument is open.
  const auto open = allowed_mask(s, vocab, Variant::mmt_i, false);
  size_t open_count = 0;
  for (size_t id = 0; id < vocab.size(); ++id) open_count += open[id] ? 1 : 0;
  CHECK(open_count == 64);
}

TEST_CASE("done state allows nothing") {
  const auto vocab = variant_vocab(Variant::uncond);
  GrammarState s = initial_state();
  for (const Event& e : encode(Song{}, Variant::uncond)) {
    s = advance(s, e, Variant::uncond).next;
  }
  CHECK(s.section == GrammarState::Section::done);
  const auto mask = allowed_mask(s, vocab, Variant::uncond, false);
  for (size_t id = 0; id < vocab.size(); ++id) CHECK_FALSE(mask[id]);
}

TEST_CASE("round trip equals the normalized song across variants") {
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 250; ++trial) {
    for (Variant v : {Variant::uncond, Variant::mmt_i, Variant::mmt_g, Variant::mmt_gi}) {
      testing::SongOptions opt;
      opt.with_tags = variant_has_tags(v);
      opt.allow_empty = !variant_has_tags(v);
      const Song normalized = quantized_and_sorted(testing::random_song(rng, opt));
      const auto events = encode(normalized, v);

      // Every encoded sequence is accepted by folding advance over it.
      GrammarState s = initial_state();
      for (const Event& e : events) {
        const auto step = advance(s, e, v);
        REQUIRE(step.accepted);
        s = step.next;
      }
      CHECK(s.section == GrammarState::Section::done);

      // Token-count law: 1 + [tags] + [programs] + 1 + 5N + 1.
      size_t expected_len = 2 + 5 * normalized.note_count() + 1;
      if (variant_has_tags(v)) expected_len += 1 + normalized.genre_tags.size();
      if (variant_has_programs(v)) expected_len += 1 + normalized.tracks.size();
      CHECK(events.size() == expected_len);

      // No tag/instrument-list events after start-of-notes (instrument events
      // inside note groups always follow a position event).
      bool in_notes = false;
      EventKind prev = EventKind::pad;
      for (const Event& e : events) {
        if (e.kind == EventKind::start_of_notes) in_notes = true;
        if (in_notes && e.kind == EventKind::tag) FAIL("tag after start-of-notes");
        if (in_notes && e.kind == EventKind::instrument) {
          CHECK(prev == EventKind::position);
        }
        prev = e.kind;
      }

      CHECK(decode(events, v) == normalized);
      ++checked;
    }
  }
  CHECK(checked == 1000);
}

TEST_CASE("round trip through token ids") {
  Rng rng(11);
  const auto vocab = variant_vocab(Variant::mmt_gi);
  testing::SongOptions opt;
  opt.with_tags = true;
  const Song normalized = quantized_and_sorted(testing::random_song(rng, opt));
  const auto ids = encode_ids(normalized, Variant::mmt_gi, vocab);
  CHECK(decode_ids(ids, Variant::mmt_gi, vocab) == normalized);
}

TEST_CASE("truncated streams decode by dropping the partial trailing group") {
  const auto events = encode(two_note_song(), Variant::uncond);
  // Cut mid-way through the second note group (after its pitch event).
  std::vector<Event> cut(events.begin(), events.begin() + 2 + 5 + 4);
  const Song decoded = decode(cut, Variant::uncond);
  REQUIRE(decoded.tracks.size() == 1);
  CHECK(decoded.tracks[0].notes.size() == 1);
  // Before start-of-notes the stream is unusable.
  const std::vector<Event> too_short = {{EventKind::start_of_song, 0}};
  CHECK_THROWS_WITH_AS(decode(too_short, Variant::uncond),
                       doctest::Contains("truncated"), Error);
}

TEST_CASE("decode maps drum instrument ids onto drum tracks") {
  Song song;
  song.tracks.push_back({63, true, {{0, 40, 6, 64}}});
  song.tracks.push_back({0, false, {{0, 60, 6, 64}}});
  quantize_and_sort(song);
  const auto decoded = decode(encode(song, Variant::uncond), Variant::uncond);
  REQUIRE(decoded.tracks.size() == 2);
  CHECK_FALSE(decoded.tracks[0].is_drum);
  CHECK(decoded.tracks[1].is_drum);
}

TEST_CASE("token files round trip sequences and fingerprint") {
  const auto vocab = variant_vocab(Variant::uncond);
  const std::string path = "token_file_test.txt";
  const std::vector<std::vector<int32_t>> seqs = {
      encode_ids(quantized_and_sorted(two_note_song()), Variant::uncond, vocab),
      {1, 2, 3},
  };
  write_token_file(path, vocab, seqs);
  const auto file = read_token_file(path);
  CHECK(file.vocab_fingerprint == vocab.fingerprint());
  CHECK(file.sequences == seqs);
  std::remove(path.c_str());
}
