#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::printf("gridwit: cli under construction\n");
  return 64;
}
