#include "dobf/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>

#include "dobf/errors.hpp"
#include "dobf/text.hpp"

namespace dobf {
namespace {

// Temporary plaintext file, 0600, removed on destruction.
class TempSourceFile {
public:
    explicit TempSourceFile(std::string_view content) {
        const char* tmpdir = std::getenv("TMPDIR");
        path_ = std::string(tmpdir && *tmpdir ? tmpdir : "/tmp") + "/dobf-src-XXXXXX";
        const int fd = ::mkstemp(path_.data());
        if (fd < 0) throw IoError("mkstemp failed: " + std::string(std::strerror(errno)));
        std::size_t written = 0;
        while (written < content.size()) {
            const ssize_t n = ::write(fd, content.data() + written, content.size() - written);
            if (n < 0) {
                ::close(fd);
                ::unlink(path_.c_str());
                throw IoError("temp write failed");
            }
            written += static_cast<std::size_t>(n);
        }
        ::close(fd);
    }

    ~TempSourceFile() { ::unlink(path_.c_str()); }
    TempSourceFile(const TempSourceFile&) = delete;
    TempSourceFile& operator=(const TempSourceFile&) = delete;

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

std::string substitute_placeholder(std::string_view tmpl, const std::string& path) {
    const std::string placeholder = "{file}";
    std::string out;
    std::size_t pos = 0;
    bool found = false;
    while (true) {
        const std::size_t hit = tmpl.find(placeholder, pos);
        if (hit == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, hit - pos));
        out.append(path);
        pos = hit + placeholder.size();
        found = true;
    }
    if (!found) throw std::invalid_argument("interpreter command lacks a {file} placeholder");
    return out;
}

// Runs `command` under /bin/sh, capturing stdout and stderr separately.
ExecutionResult run_shell(const std::string& command) {
    int out_pipe[2], err_pipe[2];
    if (::pipe(out_pipe) != 0) throw SpawnError("pipe failed");
    if (::pipe(err_pipe) != 0) {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw SpawnError("pipe failed");
    }

    const auto started = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        throw SpawnError("fork failed: " + std::string(std::strerror(errno)));
    }

    if (pid == 0) {
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    std::string out_bytes, err_bytes;
    std::array<pollfd, 2> fds{{{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}}};
    std::array<std::string*, 2> sinks{&out_bytes, &err_bytes};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0) {
        if (::poll(fds.data(), fds.size(), -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (std::size_t i = 0; i < fds.size(); ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
            if (n > 0) {
                sinks[i]->append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (n < 0 && errno != EINTR)) {
                ::close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw SpawnError("waitpid failed");
    }

    ExecutionResult result;
    result.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    result.stdout_text = utf8_sanitize(out_bytes);
    result.stderr_text = utf8_sanitize(err_bytes);
    return result;
}

}  // namespace

std::string deobfuscate(std::string_view ciphertext_utf8, const KeyFile& key) {
    const std::u32string ciphertext = utf8_decode(ciphertext_utf8);
    const IndexSequence input = encode_text(ciphertext, key.encoder_vocab);
    const EncoderState state = encode(key.weights, input);
    const std::u32string plaintext =
        decode_greedy(key.weights, state, key.decoder_vocab, key.config.max_decode_len);
    return utf8_encode(plaintext);
}

ExecutionResult execute(std::string_view ciphertext_utf8, const KeyFile& key,
                        std::string_view interpreter_cmd,
                        const std::optional<Sha256Digest>& verify_digest) {
    if (interpreter_cmd.empty()) {
        throw std::invalid_argument("no interpreter command configured");
    }
    if (interpreter_cmd.find("{file}") == std::string_view::npos) {
        throw std::invalid_argument("interpreter command lacks a {file} placeholder");
    }

    const std::string plaintext = deobfuscate(ciphertext_utf8, key);
    if (verify_digest && sha256(plaintext) != *verify_digest) {
        throw DigestMismatchError();
    }

    TempSourceFile source(plaintext);
    const std::string command = substitute_placeholder(interpreter_cmd, source.path());
    return run_shell(command);
}

}  // namespace dobf
