#include "mapreplay/tracer.hpp"

#include <algorithm>

namespace mapreplay {

namespace {

std::atomic<std::uint64_t> g_next_session_uid{1};

struct TlsCache {
  std::uint64_t session_uid = 0;
  void* buffer = nullptr;
};
thread_local TlsCache t_cache;

}  // namespace

TraceSession::TraceSession(bool start_open, const MapConfig& defaults)
    : uid_(g_next_session_uid.fetch_add(1)), defaults_(defaults), open_(start_open) {
  defaults_.validate();
}

TraceSession::~TraceSession() {
  if (t_cache.session_uid == uid_) t_cache = {};
}

TraceSession::ThreadBuffer& TraceSession::buffer() {
  if (t_cache.session_uid == uid_) return *static_cast<ThreadBuffer*>(t_cache.buffer);
  std::lock_guard lock(buffers_mu_);
  auto& slot = buffers_[std::this_thread::get_id()];
  if (!slot) {
    slot = std::make_unique<ThreadBuffer>();
    slot->thread_id = buffers_.size() - 1;
  }
  t_cache = {uid_, slot.get()};
  return *slot;
}

bool TraceSession::record(RawEvent event) {
  if (!is_open()) return false;
  ThreadBuffer& buf = buffer();
  event.thread_id = buf.thread_id;
  buf.events.emplace_back(next_seq_.fetch_add(1, std::memory_order_relaxed), event);
  return true;
}

RawTrace TraceSession::close() {
  open_.store(false, std::memory_order_release);
  std::vector<std::pair<std::uint64_t, RawEvent>> all;
  {
    std::lock_guard lock(buffers_mu_);
    std::size_t total = 0;
    for (auto& [tid, buf] : buffers_) total += buf->events.size();
    all.reserve(total);
    for (auto& [tid, buf] : buffers_) {
      all.insert(all.end(), buf->events.begin(), buf->events.end());
      buf->events.clear();
    }
  }
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  RawTrace trace;
  trace.events.reserve(all.size());
  for (auto& [seq, e] : all) trace.events.push_back(e);
  return trace;
}

void TraceSession::close_to_file(const std::filesystem::path& path) {
  write_raw_trace(path, close());
}

}  // namespace mapreplay
