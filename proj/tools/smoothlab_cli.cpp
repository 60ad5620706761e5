#include <cstdio>

int main() {
    std::puts("smoothlab cli: not wired up yet");
    return 1;
}
