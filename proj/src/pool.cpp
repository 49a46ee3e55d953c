// Part of the LEDS project, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "leds/pool.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <random>
#include <system_error>

#include "leds/error.hpp"
#include "leds/transaction.hpp"
#include "pool_state.hpp"

namespace leds {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::capacity_too_small: return "CapacityTooSmall";
    case ErrorCode::already_exists: return "AlreadyExists";
    case ErrorCode::layout_mismatch: return "LayoutMismatch";
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::pool_locked: return "PoolLocked";
    case ErrorCode::pool_closed: return "PoolClosed";
    case ErrorCode::out_of_space: return "OutOfSpace";
    case ErrorCode::out_of_bounds: return "OutOfBounds";
    case ErrorCode::foreign_pool: return "ForeignPool";
    case ErrorCode::double_free: return "DoubleFree";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::nested_transaction: return "NestedTransaction";
    case ErrorCode::tx_state_error: return "TxStateError";
    case ErrorCode::tx_required: return "TxRequired";
    case ErrorCode::log_full: return "LogFull";
    case ErrorCode::simulated_crash: return "SimulatedCrash";
    case ErrorCode::overlapping_fields: return "OverlappingFields";
    case ErrorCode::non_contiguous_level: return "NonContiguousLevel";
    case ErrorCode::unknown_level: return "UnknownLevel";
    case ErrorCode::no_such_field: return "NoSuchField";
    case ErrorCode::fingerprint_mismatch: return "FingerprintMismatch";
    case ErrorCode::migration_missing: return "MigrationMissing";
    case ErrorCode::version_regression: return "VersionRegression";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::corrupt_structure: return "CorruptStructure";
  }
  return "Unknown";
}

WriteStats operator-(const WriteStats& a, const WriteStats& b) noexcept {
  WriteStats d;
  d.bytes_user = a.bytes_user - b.bytes_user;
  d.bytes_log = a.bytes_log - b.bytes_log;
  d.bytes_meta = a.bytes_meta - b.bytes_meta;
  d.flush_events = a.flush_events - b.flush_events;
  d.allocations = a.allocations - b.allocations;
  d.translations = a.translations - b.translations;
  d.deep_copies = a.deep_copies - b.deep_copies;
  d.checks = a.checks - b.checks;
  d.migration_bytes = a.migration_bytes - b.migration_bytes;
  return d;
}

namespace detail {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(ErrorCode::io_error, what + ": " + std::generic_category().message(errno));
}

constexpr std::uint64_t round_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

constexpr std::uint64_t kSmallLimit = 1024;

}  // namespace

PoolState::~PoolState() { close(); }

void PoolState::map_file(const std::filesystem::path& p, bool create, std::uint64_t file_size) {
  path = p;
  lock_path_ = p;
  lock_path_ += ".lock";
  lock_fd_ = ::open(lock_path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw_errno("cannot open lock file " + lock_path_.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(ErrorCode::pool_locked, p.string() + " is already open");
  }

  int flags = O_RDWR | O_CLOEXEC | (create ? O_CREAT : 0);
  fd_ = ::open(p.c_str(), flags, 0644);
  if (fd_ < 0) {
    int saved = errno;
    close();
    errno = saved;
    throw_errno("cannot open " + p.string());
  }
  if (create) {
    if (::ftruncate(fd_, static_cast<off_t>(file_size)) != 0) {
      int saved = errno;
      close();
      errno = saved;
      throw_errno("cannot size " + p.string());
    }
  } else {
    struct stat st {};
    if (::fstat(fd_, &st) != 0) throw_errno("cannot stat " + p.string());
    file_size = static_cast<std::uint64_t>(st.st_size);
    if (file_size < header::kSize) {
      close();
      throw Error(ErrorCode::bad_magic, p.string() + " is too small to be a pool");
    }
  }
  void* m = ::mmap(nullptr, file_size, PROT_READ | PROT_WRITE, MAP_SHARED, fd_, 0);
  if (m == MAP_FAILED) {
    int saved = errno;
    close();
    errno = saved;
    throw_errno("cannot map " + p.string());
  }
  base_ = static_cast<std::byte*>(m);
  file_size_ = file_size;
}

void PoolState::load_header() {
  if (std::memcmp(base_ + header::kMagic, header::kMagicText, 8) != 0)
    throw Error(ErrorCode::bad_magic, path.string() + " has no pool magic");
  if (get<std::uint32_t>(header::kFormatVersion) != header::kFormat)
    throw Error(ErrorCode::bad_magic, "unsupported pool format version");
  uuid = get<std::uint64_t>(header::kPoolUuid);
  heap_offset_ = get<std::uint64_t>(header::kHeapOffset);
  capacity_ = get<std::uint64_t>(header::kCapacity);
  log_offset_ = get<std::uint64_t>(header::kLogOffset);
  log_capacity_ = get<std::uint64_t>(header::kLogCapacity);
  frontier_ = get<std::uint64_t>(header::kAllocatorState);
  log_used_ = get<std::uint64_t>(header::kLogControl + 8);
  if (heap_offset_ + capacity_ > file_size_ || log_offset_ + log_capacity_ > file_size_ ||
      frontier_ > capacity_)
    throw Error(ErrorCode::bad_magic, "pool header geometry is inconsistent with the file");
}

void PoolState::close() noexcept {
  if (base_ != nullptr) {
    ::munmap(base_, file_size_);
    base_ = nullptr;
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (lock_fd_ >= 0) {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
    lock_fd_ = -1;
  }
  active_tx = nullptr;
}

void PoolState::crash_now() {
  std::uint64_t ordinal = writes_since_arm;
  crash_armed = false;
  close();
  throw SimulatedCrash(ordinal);
}

void PoolState::persist(std::uint64_t absolute, const void* src, std::uint64_t length,
                        Category category) {
  ensure_open();
  ++writes_since_arm;
  if (crash_armed && writes_since_arm >= crash_trigger) crash_now();
  ++writes_total;
  std::memmove(base_ + absolute, src, length);
  switch (category) {
    case Category::user: stats.bytes_user += length; break;
    case Category::log: stats.bytes_log += length; break;
    case Category::meta: stats.bytes_meta += length; break;
  }
  ++stats.flush_events;
}

void PoolState::persist_zero(std::uint64_t absolute, std::uint64_t length, Category category) {
  ensure_open();
  ++writes_since_arm;
  if (crash_armed && writes_since_arm >= crash_trigger) crash_now();
  ++writes_total;
  std::memset(base_ + absolute, 0, length);
  switch (category) {
    case Category::user: stats.bytes_user += length; break;
    case Category::log: stats.bytes_log += length; break;
    case Category::meta: stats.bytes_meta += length; break;
  }
  ++stats.flush_events;
}

std::byte* PoolState::translate(ObjectId oid) {
  ensure_open();
  if (oid.pool_uuid != uuid) {
    if (oid.is_null()) throw Error(ErrorCode::out_of_bounds, "null ObjectId");
    throw Error(ErrorCode::foreign_pool, "ObjectId belongs to another pool");
  }
  if (!in_heap(oid.offset) || oid.offset % kAlignment != 0)
    throw Error(ErrorCode::out_of_bounds, "ObjectId offset outside the heap");
  ++stats.translations;
  return base_ + oid.offset;
}

void PoolState::check_range(ObjectId oid, std::uint64_t offset, std::uint64_t length) {
  translate(oid);
  std::uint64_t begin = oid.offset + offset;
  if (begin < oid.offset || begin + length < begin || begin + length > heap_offset_ + frontier_)
    throw Error(ErrorCode::out_of_bounds, "range extends past the heap");
}

std::size_t PoolState::class_index(std::uint64_t bytes) const noexcept {
  if (bytes <= kSmallLimit) return static_cast<std::size_t>(bytes / kAlignment - 1);
  return static_cast<std::size_t>(64 + std::countr_zero(bytes) - 11);
}

bool PoolState::block_allocated(std::uint64_t payload) const noexcept {
  if (!in_heap(payload) || payload % kAlignment != 0) return false;
  std::uint64_t h = payload - kBlockHeaderSize;
  return get<std::uint32_t>(h) == kBlockMagic && get<std::uint32_t>(h + 4) == kBlockAllocated;
}

ObjectId PoolState::alloc(std::uint64_t size, bool zeroed, Transaction* tx) {
  ensure_open();
  if (size == 0) throw Error(ErrorCode::invalid_argument, "allocation size must be positive");
  std::uint64_t bytes = Pool::usable_size(size);
  std::size_t idx = class_index(bytes);
  if (free_lists_.size() <= idx) free_lists_.resize(idx + 1);

  auto& list = free_lists_[idx];
  bool bump = list.empty();
  std::uint64_t payload = 0;
  if (bump) {
    if (frontier_ + kBlockHeaderSize + bytes > capacity_)
      throw Error(ErrorCode::out_of_space, "pool heap exhausted");
    payload = heap_offset_ + frontier_ + kBlockHeaderSize;
  } else {
    payload = list.back();
    list.pop_back();
  }

  try {
    if (tx != nullptr) log_append(undo::kAlloc, payload, bytes, nullptr);
  } catch (...) {
    if (!bump && open()) list.push_back(payload);
    throw;
  }
  struct {
    std::uint32_t magic;
    std::uint32_t state;
    std::uint64_t bytes;
  } hdr{kBlockMagic, kBlockAllocated, bytes};
  persist(payload - kBlockHeaderSize, &hdr, sizeof(hdr), Category::meta);
  if (bump) {
    std::uint64_t next = frontier_ + kBlockHeaderSize + bytes;
    persist_value(header::kAllocatorState, next, Category::meta);
    frontier_ = next;
  }
  if (zeroed) persist_zero(payload, bytes, Category::meta);
  live_bytes_ += bytes;
  ++live_objects_;
  return ObjectId{uuid, payload};
}

void PoolState::release(std::uint64_t payload) {
  if (!block_allocated(payload)) throw Error(ErrorCode::double_free, "block is not allocated");
  persist_value(payload - kBlockHeaderSize + 4, kBlockFree, Category::meta);
  std::uint64_t bytes = block_bytes(payload);
  std::size_t idx = class_index(bytes);
  if (free_lists_.size() <= idx) free_lists_.resize(idx + 1);
  free_lists_[idx].push_back(payload);
  live_bytes_ -= bytes;
  --live_objects_;
}

void PoolState::scan_heap() {
  free_lists_.clear();
  live_bytes_ = 0;
  live_objects_ = 0;
  std::uint64_t pos = 0;
  while (pos < frontier_) {
    std::uint64_t h = heap_offset_ + pos;
    if (get<std::uint32_t>(h) != kBlockMagic)
      throw Error(ErrorCode::io_error, "corrupt block header in heap");
    std::uint32_t st = get<std::uint32_t>(h + 4);
    std::uint64_t bytes = get<std::uint64_t>(h + 8);
    if (bytes == 0 || pos + kBlockHeaderSize + bytes > frontier_)
      throw Error(ErrorCode::io_error, "corrupt block size in heap");
    std::uint64_t payload = h + kBlockHeaderSize;
    if (st == kBlockAllocated) {
      live_bytes_ += bytes;
      ++live_objects_;
    } else {
      std::size_t idx = class_index(bytes);
      if (free_lists_.size() <= idx) free_lists_.resize(idx + 1);
      free_lists_[idx].push_back(payload);
    }
    pos += kBlockHeaderSize + bytes;
  }
  // LIFO reuse starting from low addresses.
  for (auto& list : free_lists_) std::reverse(list.begin(), list.end());
}

void PoolState::write_log_control(std::uint64_t state, std::uint64_t used) {
  std::uint64_t words[2] = {state, used};
  persist(header::kLogControl, words, sizeof(words), Category::meta);
  log_used_ = used;
}

void PoolState::log_append(std::uint32_t type, std::uint64_t absolute, std::uint64_t length,
                           const std::byte* data) {
  std::uint64_t payload = type == undo::kSnapshot ? length : 0;
  std::uint64_t record = undo::kRecordHeaderSize + payload;
  if (log_used_ + record > log_capacity_)
    throw Error(ErrorCode::log_full, "undo log region exhausted");
  scratch_.resize(record);
  std::uint64_t words[4] = {type, absolute, length, 0};
  std::memcpy(scratch_.data(), words, sizeof(words));
  if (payload != 0) std::memcpy(scratch_.data() + undo::kRecordHeaderSize, data, payload);
  persist(log_offset_ + log_used_, scratch_.data(), record, Category::log);
  write_log_control(undo::kStateActive, log_used_ + record);
}

namespace {

struct LogRecord {
  std::uint32_t type;
  std::uint64_t absolute;
  std::uint64_t length;
  std::uint64_t data;  // absolute position of the saved bytes
};

std::vector<LogRecord> parse_log(const PoolState& s, std::uint64_t log_offset, std::uint64_t used) {
  std::vector<LogRecord> out;
  std::uint64_t pos = 0;
  while (pos + undo::kRecordHeaderSize <= used) {
    std::uint64_t at = log_offset + pos;
    LogRecord r{static_cast<std::uint32_t>(s.get<std::uint64_t>(at)), s.get<std::uint64_t>(at + 8),
                s.get<std::uint64_t>(at + 16), at + undo::kRecordHeaderSize};
    out.push_back(r);
    pos += undo::kRecordHeaderSize + (r.type == undo::kSnapshot ? r.length : 0);
  }
  return out;
}

}  // namespace

void PoolState::apply_undo(bool runtime) {
  auto records = parse_log(*this, log_offset_, log_used_);
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->type == undo::kSnapshot) {
      persist(it->absolute, base_ + it->data, it->length, Category::log);
    } else if (it->type == undo::kAlloc) {
      if (!block_allocated(it->absolute)) continue;
      if (runtime) {
        release(it->absolute);
      } else {
        persist_value(it->absolute - kBlockHeaderSize + 4, kBlockFree, Category::meta);
      }
    }
  }
}

void PoolState::apply_frees(bool runtime) {
  auto records = parse_log(*this, log_offset_, log_used_);
  for (const auto& r : records) {
    if (r.type != undo::kFree || !block_allocated(r.absolute)) continue;
    if (runtime) {
      release(r.absolute);
    } else {
      persist_value(r.absolute - kBlockHeaderSize + 4, kBlockFree, Category::meta);
    }
  }
}

void PoolState::commit_log() {
  if (log_used_ == 0) return;
  persist_value(header::kLogControl, undo::kStateCommitted, Category::meta);
  apply_frees(true);
  write_log_control(undo::kStateIdle, 0);
}

void PoolState::rollback_log() {
  if (log_used_ == 0) return;
  apply_undo(true);
  write_log_control(undo::kStateIdle, 0);
}

void PoolState::recover_log() {
  std::uint64_t state = get<std::uint64_t>(header::kLogControl);
  if (log_used_ == 0 && state == undo::kStateIdle) return;
  if (state == undo::kStateCommitted) {
    apply_frees(false);
  } else {
    apply_undo(false);
  }
  write_log_control(undo::kStateIdle, 0);
}

}  // namespace detail

// --- Pool facade -------------------------------------------------------------

Pool::Pool(std::unique_ptr<detail::PoolState> state) : s_(std::move(state)) {}
Pool::Pool(Pool&&) noexcept = default;
Pool& Pool::operator=(Pool&&) noexcept = default;
Pool::~Pool() = default;

detail::PoolState& Pool::state() const {
  if (!s_) throw Error(ErrorCode::pool_closed, "moved-from pool handle");
  return *s_;
}

Pool Pool::create(const std::filesystem::path& path, std::string_view layout_name,
                  std::uint64_t capacity) {
  if (layout_name.size() > header::kMaxLayoutName)
    throw Error(ErrorCode::invalid_argument, "layout name longer than 63 bytes");
  if (capacity < kMinCapacity)
    throw Error(ErrorCode::capacity_too_small, "capacity must be at least 1 MiB");
  std::error_code ec;
  if (std::filesystem::exists(path, ec) && std::filesystem::file_size(path, ec) > 0)
    throw Error(ErrorCode::already_exists, path.string() + " already exists");

  capacity = detail::round_up(capacity, 4096);
  std::uint64_t log_capacity = detail::round_up(std::max<std::uint64_t>(256 << 10, capacity / 4), 4096);
  std::uint64_t file_size = header::kSize + capacity + log_capacity;

  auto s = std::make_unique<detail::PoolState>();
  s->map_file(path, true, file_size);

  std::random_device rd;
  std::uint64_t uuid = 0;
  while (uuid < 2) uuid = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();

  using detail::Category;
  s->persist(header::kMagic, header::kMagicText, 8, Category::meta);
  s->persist_value(header::kFormatVersion, header::kFormat, Category::meta);
  char name[64] = {};
  std::memcpy(name, layout_name.data(), layout_name.size());
  s->persist(header::kLayoutName, name, sizeof(name), Category::meta);
  s->persist_value(header::kLayoutVersion, std::uint32_t{1}, Category::meta);
  s->persist_value(header::kPoolUuid, uuid, Category::meta);
  s->persist_value(header::kHeapOffset, header::kSize, Category::meta);
  s->persist_value(header::kCapacity, capacity, Category::meta);
  s->persist_value(header::kAllocatorStateOffset, header::kAllocatorState, Category::meta);
  s->persist_value(header::kLogOffset, header::kSize + capacity, Category::meta);
  s->persist_value(header::kLogCapacity, log_capacity, Category::meta);
  s->load_header();
  s->scan_heap();
  return Pool(std::move(s));
}

namespace {

std::unique_ptr<detail::PoolState> open_state(const std::filesystem::path& path,
                                              const std::string_view* layout_name) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec))
    throw Error(ErrorCode::io_error, path.string() + " does not exist");
  auto s = std::make_unique<detail::PoolState>();
  s->map_file(path, false, 0);
  s->load_header();
  if (layout_name != nullptr) {
    const char* stored = reinterpret_cast<const char*>(s->at(header::kLayoutName));
    std::string_view stored_name(stored, strnlen(stored, 64));
    if (stored_name != *layout_name)
      throw Error(ErrorCode::layout_mismatch,
                  "pool layout '" + std::string(stored_name) + "' != '" + std::string(*layout_name) + "'");
  }
  s->recover_log();
  s->scan_heap();
  return s;
}

}  // namespace

Pool Pool::open(const std::filesystem::path& path, std::string_view layout_name) {
  return Pool(open_state(path, &layout_name));
}

Pool Pool::recover(const std::filesystem::path& path) { return Pool(open_state(path, nullptr)); }

void Pool::remove(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec))
    throw Error(ErrorCode::io_error, path.string() + " does not exist");
  auto lock = path;
  lock += ".lock";
  int fd = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd >= 0) {
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd);
      throw Error(ErrorCode::pool_locked, path.string() + " is open");
    }
    std::filesystem::remove(lock, ec);
    ::close(fd);
  }
  if (!std::filesystem::remove(path, ec) || ec)
    throw Error(ErrorCode::io_error, "cannot remove " + path.string());
}

void Pool::close() {
  if (s_) s_->close();
}

bool Pool::is_open() const noexcept { return s_ && s_->open(); }

const std::filesystem::path& Pool::path() const noexcept {
  static const std::filesystem::path empty;
  return s_ ? s_->path : empty;
}

std::uint64_t Pool::uuid() const { return state().uuid; }

std::string Pool::layout_name() const {
  auto& s = state();
  s.ensure_open();
  const char* p = reinterpret_cast<const char*>(s.at(header::kLayoutName));
  return std::string(p, strnlen(p, 64));
}

std::uint32_t Pool::layout_version() const {
  auto& s = state();
  s.ensure_open();
  return s.get<std::uint32_t>(header::kLayoutVersion);
}

void Pool::set_layout_version(std::uint32_t version) {
  auto& s = state();
  if (s.active_tx != nullptr) {
    s.active_tx->write_absolute(header::kLayoutVersion, std::as_bytes(std::span{&version, 1}));
  } else {
    s.persist_value(header::kLayoutVersion, version, detail::Category::meta);
  }
}

std::uint64_t Pool::schema_fingerprint() const {
  auto& s = state();
  s.ensure_open();
  return s.get<std::uint64_t>(header::kSchemaFingerprint);
}

void Pool::set_schema_fingerprint(std::uint64_t fingerprint) {
  auto& s = state();
  if (s.active_tx != nullptr) {
    s.active_tx->write_absolute(header::kSchemaFingerprint, std::as_bytes(std::span{&fingerprint, 1}));
  } else {
    s.persist_value(header::kSchemaFingerprint, fingerprint, detail::Category::meta);
  }
}

std::uint64_t Pool::capacity() const { return state().capacity_; }
std::uint64_t Pool::heap_offset() const { return state().heap_offset_; }
std::uint64_t Pool::log_capacity() const { return state().log_capacity_; }

ObjectId Pool::root() const {
  auto& s = state();
  s.ensure_open();
  return s.get<ObjectId>(header::kRootId);
}

std::uint64_t Pool::root_size() const {
  auto& s = state();
  s.ensure_open();
  return s.get<std::uint64_t>(header::kRootSize);
}

ObjectId Pool::get_root(std::uint64_t requested_size) {
  if (requested_size == 0) throw Error(ErrorCode::invalid_argument, "root size must be positive");
  auto& s = state();
  ObjectId current = root();
  std::uint64_t current_size = root_size();
  if (!current.is_null() && requested_size <= current_size) return current;

  auto install = [&](Transaction& tx) {
    ObjectId fresh = tx.alloc_zeroed(requested_size);
    if (!current.is_null()) {
      tx.copy_bytes(fresh, current, current_size);
      tx.free(current);
    }
    struct {
      ObjectId id;
      std::uint64_t size;
    } slot{fresh, requested_size};
    tx.write_absolute(header::kRootId, std::as_bytes(std::span{&slot, 1}));
    return fresh;
  };
  if (s.active_tx != nullptr) return install(*s.active_tx);
  Transaction tx(*this);
  ObjectId id = install(tx);
  tx.commit();
  return id;
}

void Pool::drop_root(Transaction& tx) {
  ObjectId current = root();
  if (current.is_null()) return;
  tx.free(current);
  struct {
    ObjectId id;
    std::uint64_t size;
  } slot{};
  tx.write_absolute(header::kRootId, std::as_bytes(std::span{&slot, 1}));
}

std::byte* Pool::translate(ObjectId oid) { return state().translate(oid); }

std::byte* Pool::translate_unchecked(ObjectId oid) noexcept { return s_->at(oid.offset); }

void Pool::read(ObjectId oid, std::uint64_t offset, std::span<std::byte> out) {
  auto& s = state();
  s.check_range(oid, offset, out.size());
  std::memcpy(out.data(), s.at(oid.offset + offset), out.size());
}

void Pool::store(ObjectId oid, std::uint64_t offset, std::span<const std::byte> bytes) {
  auto& s = state();
  s.check_range(oid, offset, bytes.size());
  s.persist(oid.offset + offset, bytes.data(), bytes.size(), detail::Category::user);
}

ObjectId Pool::alloc(std::uint64_t size, bool zeroed) {
  auto& s = state();
  if (s.active_tx != nullptr) {
    ObjectId id = s.alloc(size, zeroed, s.active_tx);
    s.active_tx->allocated_.insert(id.offset);
    return id;
  }
  return s.alloc(size, zeroed, nullptr);
}

void Pool::free(ObjectId oid) {
  auto& s = state();
  s.ensure_open();
  if (oid.pool_uuid != s.uuid && !oid.is_null())
    throw Error(ErrorCode::foreign_pool, "ObjectId belongs to another pool");
  s.release(oid.offset);
}

bool Pool::is_allocated(ObjectId oid) const {
  auto& s = state();
  s.ensure_open();
  return oid.pool_uuid == s.uuid && s.block_allocated(oid.offset);
}

std::uint64_t Pool::usable_size(std::uint64_t size) noexcept {
  if (size <= detail::kSmallLimit) return std::max<std::uint64_t>(kAlignment, detail::round_up(size, kAlignment));
  return std::bit_ceil(size);
}

std::uint64_t Pool::live_bytes() const { return state().live_bytes_; }
std::uint64_t Pool::live_objects() const { return state().live_objects_; }

const WriteStats& Pool::stats() const { return state().stats; }
WriteStats& Pool::counters() { return state().stats; }

void Pool::arm_crash(CrashPlan plan) {
  if (plan.trigger < 1) throw Error(ErrorCode::invalid_argument, "crash trigger must be >= 1");
  auto& s = state();
  s.crash_armed = plan.armed;
  s.crash_trigger = plan.trigger;
  s.writes_since_arm = 0;
}

void Pool::disarm_crash() { state().crash_armed = false; }

std::uint64_t Pool::persistent_writes() const { return state().writes_total; }

Transaction* Pool::active_transaction() const noexcept { return s_ ? s_->active_tx : nullptr; }

std::uint64_t Pool::transaction_epoch() const noexcept { return s_ ? s_->tx_epoch : 0; }

}  // namespace leds
