// Replaces the global allocator to watch live heap bytes while a large log
// file streams through the reader.
#include <atomic>
#include <cstdlib>
#include <new>

#include "doctest.h"
#include "sentinel/ingest.hpp"
#include "support.hpp"

namespace {

std::atomic<long long> g_live{0};
std::atomic<long long> g_peak{0};
constexpr std::size_t kHeader = alignof(std::max_align_t);

void* track_alloc(std::size_t n) {
    void* p = std::malloc(n + kHeader);
    if (p == nullptr) throw std::bad_alloc();
    *static_cast<std::size_t*>(p) = n;
    const long long live = g_live.fetch_add(static_cast<long long>(n)) + static_cast<long long>(n);
    long long peak = g_peak.load();
    while (live > peak && !g_peak.compare_exchange_weak(peak, live)) {
    }
    return static_cast<char*>(p) + kHeader;
}

void track_free(void* p) noexcept {
    if (p == nullptr) return;
    char* base = static_cast<char*>(p) - kHeader;
    g_live.fetch_sub(static_cast<long long>(*reinterpret_cast<std::size_t*>(base)));
    std::free(base);
}

}  // namespace

void* operator new(std::size_t n) { return track_alloc(n); }
void* operator new[](std::size_t n) { return track_alloc(n); }
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
    try {
        return track_alloc(n);
    } catch (...) {
        return nullptr;
    }
}
void* operator new[](std::size_t n, const std::nothrow_t& t) noexcept { return operator new(n, t); }
void operator delete(void* p) noexcept { track_free(p); }
void operator delete[](void* p) noexcept { track_free(p); }
void operator delete(void* p, std::size_t) noexcept { track_free(p); }
void operator delete[](void* p, std::size_t) noexcept { track_free(p); }

using namespace sentinel;

TEST_CASE("a million-row log streams in constant memory") {
    TempDir dir("stream");
    const auto path = dir / "http.csv";
    constexpr std::size_t kRows = 1'000'000;
    {
        std::ofstream out(path, std::ios::binary);
        const auto& cols = header_columns(SourceKind::Http);
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << '\n';
        LogEvent e;
        e.kind = EventKind::Http;
        e.pc_id = "PC-0001";
        for (std::size_t i = 0; i < kRows; ++i) {
            e.event_id = "{EV-" + std::to_string(i) + "}";
            e.timestamp = Timestamp{std::chrono::sys_seconds{std::chrono::seconds{1262304000 + static_cast<long long>(i) * 7}}};
            e.user_id = "USR" + std::to_string(1000 + i % 997);
            e.detail = "http://example.com/" + std::to_string(i % 5000) + "/page.html";
            out << to_csv_row(e) << '\n';
        }
    }

    const long long base = g_live.load();
    g_peak.store(base);
    std::size_t seen = 0, url_bytes = 0;
    const auto stats = for_each_event(path, SourceKind::Http, [&](const LogEvent& ev) {
        ++seen;
        url_bytes += ev.detail ? ev.detail->size() : 0;
    });
    const long long growth = g_peak.load() - base;
    const long long after = g_live.load();
    MESSAGE("peak heap growth while streaming: " << growth << " bytes");
    CHECK(seen == kRows);
    CHECK(stats.events == kRows);
    CHECK(stats.row_errors == 0);
    CHECK(url_bytes > kRows * 20);
    CHECK(growth < 1'000'000);
    CHECK(after == base);
}
