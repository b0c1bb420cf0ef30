#include <stdio.h>
#include <string.h>

#include "hysa.h"

#define CHECK(call)                                                         \
    do {                                                                     \
        HysaStatus s_ = (call);                                              \
        if (s_ != HYSA_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, hysa_last_error_message()); \
            return 1;                                                        \
        }                                                                    \
    } while (0)

static const char *VIDEO =
    "frame_index,arrival_time_s,size_bits_L0,size_bits_L1\n"
    "0,0,250000,500000\n1,0.5,250000,500000\n"
    "2,1.0,250000,500000\n3,1.5,250000,500000\n";

int main(void) {
    HysaConfig *cfg = NULL;
    HysaVideoTrace *video = NULL;
    HysaNetworkTrace *net = NULL;
    HysaRunResult *run = NULL;
    HysaQoe qoe;
    HysaRunStats stats;
    char *frames = NULL;

    CHECK(hysa_config_parse("frame_duration_s = 0.5\nladder_kbps = 500,1000\n", &cfg));
    CHECK(hysa_video_trace_parse(VIDEO, cfg, &video));
    CHECK(hysa_network_trace_constant(1e7, &net));
    CHECK(hysa_simulate(video, net, cfg, "hysa", &run));
    CHECK(hysa_run_result_qoe(run, &qoe));
    CHECK(hysa_run_result_stats(run, &stats));
    CHECK(hysa_run_result_frames_csv(run, &frames));
    if (stats.frames != 4 || strncmp(frames, "frame,level,", 12) != 0) {
        fprintf(stderr, "unexpected run output\n");
        return 1;
    }
    if (hysa_simulate(video, net, cfg, "bogus", &run) != HYSA_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    printf("overall=%.6f frames=%zu version=%s\n", qoe.overall, stats.frames, hysa_version());

    hysa_string_free(frames);
    hysa_run_result_free(run);
    hysa_network_trace_free(net);
    hysa_video_trace_free(video);
    hysa_config_free(cfg);
    return 0;
}
