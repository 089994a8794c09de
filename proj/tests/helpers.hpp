#pragma once

#include <vector>

#include "core/rng.hpp"
#include "core/score.hpp"

namespace mmtc::testing {

struct SongOptions {
  bool with_tags = false;      // at least one genre tag
  bool allow_empty = false;    // may produce zero tracks
  bool codec_velocity = true;  // velocity 64 (the only value the codec keeps)
  int max_tracks = 4;
  int max_notes_per_track = 30;
  int max_onset = 760; // a few notes land beyond beat 63 and get dropped
};

// Randomized raw song; run quantize_and_sort before encoding.
inline Song random_song(Rng& rng, const SongOptions& opt = {}) {
  Song song;
  const int min_tracks = opt.allow_empty ? 0 : 1;
  const int n_tracks =
      min_tracks + static_cast<int>(rng.next_below(opt.max_tracks - min_tracks + 1));
  for (int t = 0; t < n_tracks; ++t) {
    Track track;
    track.program = static_cast<int>(rng.next_below(kNumInstruments));
    track.is_drum = track.program == 63;
    const int n_notes = 1 + static_cast<int>(rng.next_below(opt.max_notes_per_track));
    for (int n = 0; n < n_notes; ++n) {
      Note note;
      note.onset = static_cast<int>(rng.next_below(opt.max_onset + 1));
      note.pitch = static_cast<int>(rng.next_below(128));
      note.duration = 1 + static_cast<int>(rng.next_below(250));
      note.velocity = opt.codec_velocity
                          ? kDefaultVelocity
                          : static_cast<int>(rng.next_below(128));
      track.notes.push_back(note);
    }
    song.tracks.push_back(std::move(track));
  }
  if (opt.with_tags) {
    const int n_tags = 1 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < n_tags; ++i) {
      song.genre_tags.push_back(static_cast<int>(rng.next_below(kNumGenres)));
    }
    song.has_metadata = true;
  }
  return song;
}

} // namespace mmtc::testing
