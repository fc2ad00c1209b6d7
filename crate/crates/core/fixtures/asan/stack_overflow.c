#include <string.h>

int main(int argc, char **argv)
{
    char buf[8];
    (void)argv;
    memset(buf, 'B', 8 + argc * 4);
    return buf[0];
}
