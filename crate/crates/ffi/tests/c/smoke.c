#include <stdio.h>
#include "hammer.h"

int main(void) {
    HammerWorld *w = NULL;
    if (hammer_world_new(3, 1, &w) != HAMMER_STATUS_OK) return 1;
    unsigned actions[3] = {1, 2, 0};
    double rewards[3];
    bool done = false;
    int steps = 0;
    while (!done) {
        if (hammer_world_step(w, actions, 3, rewards, &done) != HAMMER_STATUS_OK) return 2;
        steps++;
    }
    printf("%zu %d\n", hammer_world_obs_dim(w), steps);
    hammer_world_free(w);
    return 0;
}
