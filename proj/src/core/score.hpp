#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmtc {

// Temporal grid: 12 steps per quarter note, at most 64 beats per song.
inline constexpr int kResolution = 12;
inline constexpr int kMaxBeats = 64;
inline constexpr int kMaxDuration = 192; // 16 quarter notes
inline constexpr int kNumInstruments = 64;
inline constexpr int kNumGenres = 20;
inline constexpr int kDefaultVelocity = 64;
inline constexpr int kDefaultStepsPerMeasure = 48; // 4/4 at resolution 12

struct Note {
  int onset = 0;    // time steps from song start
  int pitch = 0;    // 0..127
  int duration = 1; // time steps, >= 1
  int velocity = kDefaultVelocity; // kept for export, never tokenized

  friend bool operator==(const Note&, const Note&) = default;
};

struct Track {
  int program = 0; // canonical instrument id, 0..63
  bool is_drum = false;
  std::vector<Note> notes;

  friend bool operator==(const Track&, const Track&) = default;
};

struct Song {
  std::vector<Track> tracks;
  std::vector<int> genre_tags; // canonical genre ids, 0..19
  bool has_metadata = false;
  int steps_per_measure = kDefaultStepsPerMeasure;

  size_t note_count() const;

  friend bool operator==(const Song&, const Song&) = default;
};

// Closed instrument/genre id spaces plus the mapping from external MIDI-style
// programs into them. The shipped table collapses the 128 GM programs into 63
// pitched instruments (pairs), reserves id 63 for the drum kit, and skips the
// last two sound effects.
class CanonicalTables {
public:
  struct Instrument {
    std::string name;
    int midi_program = 0; // representative external program for export
    bool is_drum = false;
  };

  static const CanonicalTables& builtin();
  static CanonicalTables load_json(const std::string& path);
  void save_json(const std::string& path) const;

  const std::vector<Instrument>& instruments() const { return instruments_; }
  const std::vector<std::string>& genres() const { return genres_; }

  // Returns the canonical id, or -1 when the program is unmappable.
  int map_program(int external_program, bool is_drum) const;
  // Returns the canonical genre id, or -1 for unknown names. Matching is
  // case-insensitive.
  int map_genre(const std::string& name) const;

  const Instrument& instrument(int id) const;
  const std::string& genre_name(int id) const;

private:
  CanonicalTables() = default;
  void validate() const;

  std::vector<Instrument> instruments_;
  std::vector<std::string> genres_;
  std::vector<int> program_map_; // 128 entries, -1 = skip
  int drum_canonical_ = -1;      // canonical id for drum tracks, -1 = skip

  friend CanonicalTables make_builtin_tables();
};

struct NormalizeReport {
  size_t dropped_notes = 0;   // onset outside the 64-beat window
  size_t clipped_durations = 0;
};

// Canonicalizes a song in place of all the conventions the codec relies on:
// notes beyond beat 63 (or with negative onset) are dropped, durations are
// clipped to [1, 192], tracks sharing (program, is_drum) are merged, empty
// tracks are removed, tracks are ordered by (program, is_drum) and notes
// within a track by (onset, pitch, duration). Genre tags are deduplicated and
// sorted. Idempotent; never changes pitch or velocity values.
NormalizeReport quantize_and_sort(Song& song);

// Convenience value-returning form.
Song quantized_and_sorted(Song song);

// Collects human-readable descriptions of every type-invariant violation.
// Empty result means the song is well formed.
std::vector<std::string> validate_song(const Song& song);

} // namespace mmtc
